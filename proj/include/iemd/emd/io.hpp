#pragma once

#include <cctype>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "iemd/emd/transport.hpp"

namespace iemd::emd {

/**
 * Reads a transport problem from whitespace-separated text:
 *
 *     N_T N_C
 *     supplies (N_T values)
 *     demands  (N_C values)
 *     costs    (N_T * N_C values, row-major)
 *
 * Lines starting with '#' are comments.
 */
inline TransportProblem read_problem(std::istream& in)
{
    std::string token, cleaned;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        cleaned += line;
        cleaned += ' ';
    }
    std::size_t pos = 0;
    auto next = [&]() -> double {
        while (pos < cleaned.size() && std::isspace(static_cast<unsigned char>(cleaned[pos]))) ++pos;
        if (pos >= cleaned.size()) throw ParseError("unexpected end of transport problem input");
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(cleaned.substr(pos), &used);
        } catch (const std::exception&) {
            throw ParseError("malformed number in transport problem input");
        }
        pos += used;
        return value;
    };

    const double nt_raw = next(), nc_raw = next();
    const int nt = static_cast<int>(nt_raw), nc = static_cast<int>(nc_raw);
    if (nt < 1 || nc < 1 || nt != nt_raw || nc != nc_raw)
        throw ParseError("transport problem sizes must be positive integers");

    TransportProblem p;
    p.supplies.resize(nt);
    p.demands.resize(nc);
    p.costs.resize(nt, nc);
    for (int i = 0; i < nt; ++i) p.supplies[i] = next();
    for (int j = 0; j < nc; ++j) p.demands[j] = next();
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < nc; ++j) p.costs(i, j) = next();
    while (pos < cleaned.size() && std::isspace(static_cast<unsigned char>(cleaned[pos]))) ++pos;
    if (pos != cleaned.size())
        throw ParseError("trailing data after transport problem");
    return p;
}

inline std::string format_real(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/** One line per flow cell: `u v f_uv` (0-based indices). */
inline void write_flows(std::ostream& out, const FlowSolution& sol)
{
    for (int u = 0; u < sol.flows.rows(); ++u)
        for (int v = 0; v < sol.flows.cols(); ++v)
            out << u << ' ' << v << ' ' << format_real(sol.flows(u, v)) << '\n';
}

}   // namespace iemd::emd
