#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "iemd/appearance/dictionary.hpp"
#include "iemd/appearance/signature.hpp"
#include "iemd/errors.hpp"

namespace iemd::tracking {

struct TrackerConfig
{
    int n_iter = 10;
    int n_scal = 3;
    double scale_step = 0.02;
    int particle_count = 4;
    std::vector<Point2> particle_offsets{{5, 0}, {-5, 0}, {0, 5}, {0, -5}};

    double lambda = 0.01;
    double alpha = 0.5;
    double bandwidth = 0.0;   // 0 selects half the window diagonal
    double gamma0 = 0.95;
    int templates = 10;       // L
    appearance::PatchScheme scheme;

    bool gyro_inverse = true;   // predict with H_gyro^-1 (false flips the convention)

    void validate() const
    {
        if (n_iter < 1) throw InvalidConfig("n_iter must be at least 1");
        if (n_scal < 1 || n_scal % 2 == 0) throw InvalidConfig("n_scal must be a positive odd count");
        if (!(scale_step > 0 && scale_step < 1)) throw InvalidConfig("scale_step must lie in (0, 1)");
        if (n_scal > 1 && !(1 - (n_scal / 2) * scale_step > 0))
            throw InvalidConfig("scale levels reach a nonpositive scale");
        if (particle_count < 0) throw InvalidConfig("particle_count must be nonnegative");
        if (particle_count > static_cast<int>(particle_offsets.size()))
            throw InvalidConfig("particle_count exceeds the number of particle offsets");
        if (!(lambda >= 0)) throw InvalidConfig("lambda must be nonnegative");
        if (!(gamma0 > 0 && gamma0 < 1)) throw InvalidConfig("gamma0 must lie in (0, 1)");
        if (!(bandwidth >= 0)) throw InvalidConfig("bandwidth must be nonnegative");
        if (templates < 1) throw InvalidConfig("templates must be at least 1");
        scheme.validate();
        ground().validate();
    }

    double effective_bandwidth() const { return bandwidth > 0 ? bandwidth : 0.5 * scheme.window_diagonal(); }

    appearance::GroundParams ground() const
    {
        return {alpha, effective_bandwidth(), scheme.window_diagonal()};
    }
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v)
{
    std::size_t used = 0;
    double out = 0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        throw ParseError("config key `" + key + "` expects a number, got `" + v + "`");
    }
    if (used != v.size()) throw ParseError("config key `" + key + "` expects a number, got `" + v + "`");
    return out;
}

inline int parse_int(const std::string& key, const std::string& v)
{
    const double d = parse_real(key, v);
    if (d != static_cast<int>(d)) throw ParseError("config key `" + key + "` expects an integer, got `" + v + "`");
    return static_cast<int>(d);
}

inline bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ParseError("config key `" + key + "` expects true or false, got `" + v + "`");
}

// "5,0; -5,0; 0,5" -> points
inline std::vector<Point2> parse_offsets(const std::string& key, const std::string& v)
{
    std::vector<Point2> out;
    std::stringstream all(v);
    std::string item;
    while (std::getline(all, item, ';')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto comma = item.find(',');
        if (comma == std::string::npos) throw ParseError("config key `" + key + "` expects `x,y` pairs");
        out.emplace_back(parse_real(key, trim(item.substr(0, comma))), parse_real(key, trim(item.substr(comma + 1))));
    }
    return out;
}

inline std::string format_real(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}   // namespace detail

/**
 * Reads `key = value` lines; `#` starts a comment. Keys not listed keep their
 * defaults. Unknown keys are an error. The result is validated.
 */
inline TrackerConfig read_config(std::istream& in, TrackerConfig cfg = {})
{
    std::string line;
    int lineno = 0;
    bool offsets_given = false, count_given = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(lineno) + " is not `key = value`");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key == "n_iter") cfg.n_iter = detail::parse_int(key, val);
        else if (key == "n_scal") cfg.n_scal = detail::parse_int(key, val);
        else if (key == "scale_step") cfg.scale_step = detail::parse_real(key, val);
        else if (key == "particle_count") {
            cfg.particle_count = detail::parse_int(key, val);
            count_given = true;
        }
        else if (key == "particle_offsets") {
            cfg.particle_offsets = detail::parse_offsets(key, val);
            offsets_given = true;
        }
        else if (key == "lambda") cfg.lambda = detail::parse_real(key, val);
        else if (key == "alpha") cfg.alpha = detail::parse_real(key, val);
        else if (key == "bandwidth") cfg.bandwidth = detail::parse_real(key, val);
        else if (key == "gamma0") cfg.gamma0 = detail::parse_real(key, val);
        else if (key == "templates") cfg.templates = detail::parse_int(key, val);
        else if (key == "patch_height") cfg.scheme.patch_height = detail::parse_int(key, val);
        else if (key == "patch_width") cfg.scheme.patch_width = detail::parse_int(key, val);
        else if (key == "patch_step") cfg.scheme.step = detail::parse_int(key, val);
        else if (key == "encode_step") cfg.scheme.encode_step = detail::parse_int(key, val);
        else if (key == "window_height") cfg.scheme.window_height = detail::parse_int(key, val);
        else if (key == "window_width") cfg.scheme.window_width = detail::parse_int(key, val);
        else if (key == "gyro_inverse") cfg.gyro_inverse = detail::parse_bool(key, val);
        else throw ParseError("unknown config key `" + key + "` on line " + std::to_string(lineno));
    }
    if (offsets_given && !count_given) cfg.particle_count = static_cast<int>(cfg.particle_offsets.size());
    cfg.validate();
    return cfg;
}

inline void write_config(std::ostream& out, const TrackerConfig& cfg)
{
    using detail::format_real;
    out << "n_iter = " << cfg.n_iter << '\n'
        << "n_scal = " << cfg.n_scal << '\n'
        << "scale_step = " << format_real(cfg.scale_step) << '\n'
        << "particle_count = " << cfg.particle_count << '\n'
        << "particle_offsets = ";
    for (std::size_t i = 0; i < cfg.particle_offsets.size(); ++i)
        out << (i ? "; " : "") << format_real(cfg.particle_offsets[i].x()) << ','
            << format_real(cfg.particle_offsets[i].y());
    out << '\n'
        << "lambda = " << format_real(cfg.lambda) << '\n'
        << "alpha = " << format_real(cfg.alpha) << '\n'
        << "bandwidth = " << format_real(cfg.bandwidth) << '\n'
        << "gamma0 = " << format_real(cfg.gamma0) << '\n'
        << "templates = " << cfg.templates << '\n'
        << "patch_height = " << cfg.scheme.patch_height << '\n'
        << "patch_width = " << cfg.scheme.patch_width << '\n'
        << "patch_step = " << cfg.scheme.step << '\n'
        << "encode_step = " << cfg.scheme.encode_step << '\n'
        << "window_height = " << cfg.scheme.window_height << '\n'
        << "window_width = " << cfg.scheme.window_width << '\n'
        << "gyro_inverse = " << (cfg.gyro_inverse ? "true" : "false") << '\n';
}

}   // namespace iemd::tracking
