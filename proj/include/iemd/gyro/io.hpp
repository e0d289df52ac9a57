#pragma once

#include <cctype>
#include <cstdio>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "iemd/errors.hpp"
#include "iemd/gyro/gyro.hpp"

namespace iemd::gyro {

namespace detail {

// Splits a line on commas, tabs and spaces into numbers. Blank lines and
// lines starting with '#' give an empty result.
inline std::vector<double> numbers_on_line(const std::string& raw, int lineno, const char* what)
{
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& ch : line)
        if (ch == ',' || ch == '\t' || ch == '\r') ch = ' ';
    std::istringstream in(line);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size())
            throw ParseError(std::string(what) + " line " + std::to_string(lineno) + ": bad number `" + tok + "`");
        out.push_back(v);
    }
    return out;
}

// A non-numeric first line is treated as a header.
inline bool is_header(const std::string& line)
{
    for (char ch : line) {
        if (ch == ' ' || ch == '\t') continue;
        return !(std::isdigit(static_cast<unsigned char>(ch)) || ch == '-' || ch == '+' || ch == '.' || ch == '#');
    }
    return false;
}

}   // namespace detail

/** `timestamp_s, wx, wy, wz` per line; timestamps must strictly increase. */
inline std::vector<GyroSample> read_gyro_log(std::istream& in)
{
    std::vector<GyroSample> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && detail::is_header(line)) continue;
        const auto v = detail::numbers_on_line(line, lineno, "gyro log");
        if (v.empty()) continue;
        if (v.size() != 4) throw ParseError("gyro log line " + std::to_string(lineno) + ": expected 4 values");
        if (!out.empty() && !(v[0] > out.back().timestamp))
            throw ParseError("gyro log line " + std::to_string(lineno) + ": timestamps must strictly increase");
        out.push_back({v[0], Eigen::Vector3d(v[1], v[2], v[3])});
    }
    if (out.empty()) throw EmptyLog("gyro log has no samples");
    return out;
}

/** Nine reals, row-major K. */
inline CameraIntrinsics read_intrinsics(std::istream& in)
{
    std::vector<double> v;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        const auto row = detail::numbers_on_line(line, ++lineno, "intrinsics");
        v.insert(v.end(), row.begin(), row.end());
    }
    if (v.size() != 9) throw ParseError("intrinsics file must hold exactly 9 numbers");
    CameraIntrinsics k;
    for (int i = 0; i < 9; ++i) k.K(i / 3, i % 3) = v[i];
    k.validate();
    return k;
}

/** `frame_index, timestamp_s` per line, returned as (index, time) pairs in file order. */
inline std::vector<std::pair<int, double>> read_frame_timestamps(std::istream& in)
{
    std::vector<std::pair<int, double>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && detail::is_header(line)) continue;
        const auto v = detail::numbers_on_line(line, lineno, "frame timestamps");
        if (v.empty()) continue;
        if (v.size() != 2 || v[0] != static_cast<int>(v[0]))
            throw ParseError("frame timestamps line " + std::to_string(lineno) + ": expected `index, seconds`");
        out.emplace_back(static_cast<int>(v[0]), v[1]);
    }
    return out;
}

inline void write_gyro_log(std::ostream& out, const std::vector<GyroSample>& samples)
{
    char buf[128];
    for (const auto& s : samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", s.timestamp, s.omega.x(), s.omega.y(),
                      s.omega.z());
        out << buf;
    }
}

}   // namespace iemd::gyro
