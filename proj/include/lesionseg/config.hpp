#pragma once

// Pipeline configuration: one struct bundling every stage's knobs, plus a
// plain-text key=value parser (dotted sections, '#' comments). Unknown keys
// are fatal so typos don't silently fall back to defaults.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lesionseg/chan_vese.hpp"
#include "lesionseg/hair_removal.hpp"
#include "lesionseg/psm.hpp"
#include "lesionseg/segment.hpp"

namespace lesionseg {

enum class Method { canny, b_otsu, chan_vese, psm, mam, expert };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::canny: return "canny";
        case Method::b_otsu: return "b_otsu";
        case Method::chan_vese: return "chan_vese";
        case Method::psm: return "psm";
        case Method::mam: return "mam";
        case Method::expert: return "expert";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    for (Method m : {Method::canny, Method::b_otsu, Method::chan_vese, Method::psm, Method::mam,
                     Method::expert})
        if (s == to_string(m)) return m;
    throw std::invalid_argument("unknown method '" + s + "'");
}

struct PipelineConfig {
    std::size_t max_pixels = 12000;
    PsmConfig psm;
    ChanVeseConfig chanvese;
    PostprocessConfig post;
    HairRemovalConfig hair;
    double delta = 0.1;
    double grid_step = 0.05;
    std::uint32_t seed = 0;
    int jobs = 1;
    std::vector<Method> methods{Method::canny, Method::b_otsu, Method::chan_vese, Method::psm,
                                Method::mam};

    void validate() const {
        if (max_pixels < 1) throw std::invalid_argument("max_pixels must be >= 1");
        if (delta < 0) throw std::invalid_argument("delta must be >= 0");
        if (!(grid_step > 0 && grid_step <= 1))
            throw std::invalid_argument("grid_step must be in (0,1]");
        if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
        if (methods.empty()) throw std::invalid_argument("methods must be nonempty");
        psm.validate();
        hair.validate();
        if (chanvese.iterations < 1)
            throw std::invalid_argument("chanvese.iterations must be >= 1");
        if (post.closing_radius < 0)
            throw std::invalid_argument("post.closing_radius must be >= 0");
    }
};

inline std::vector<Method> parse_method_list(const std::string& csv) {
    std::vector<Method> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto a = tok.find_first_not_of(" \t");
        const auto b = tok.find_last_not_of(" \t");
        if (a == std::string::npos) continue;
        out.push_back(parse_method(tok.substr(a, b - a + 1)));
    }
    if (out.empty()) throw std::invalid_argument("method list is empty");
    return out;
}

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument(key + ": expected a boolean, got '" + v + "'");
}

template <typename T>
T parse_num(const std::string& v, const std::string& key) {
    std::istringstream ss(v);
    T out;
    ss >> out;
    if (ss.fail() || !(ss >> std::ws).eof())
        throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
    return out;
}

}  // namespace detail

/// Applies one `key=value` assignment. Throws on unknown keys or bad values.
inline void apply_config_entry(PipelineConfig& cfg, const std::string& key,
                               const std::string& value) {
    using detail::parse_bool;
    using detail::parse_num;
    if (key == "max_pixels") cfg.max_pixels = parse_num<std::size_t>(value, key);
    else if (key == "delta") cfg.delta = parse_num<double>(value, key);
    else if (key == "grid_step") cfg.grid_step = parse_num<double>(value, key);
    else if (key == "seed") cfg.seed = parse_num<std::uint32_t>(value, key);
    else if (key == "jobs") cfg.jobs = parse_num<int>(value, key);
    else if (key == "methods") cfg.methods = parse_method_list(value);
    else if (key == "psm.c_max") cfg.psm.c_max = parse_num<double>(value, key);
    else if (key == "psm.delta_c") cfg.psm.delta_c = parse_num<double>(value, key);
    else if (key == "psm.epsilon") cfg.psm.epsilon = parse_num<double>(value, key);
    else if (key == "chanvese.iterations") cfg.chanvese.iterations = parse_num<int>(value, key);
    else if (key == "chanvese.mu") cfg.chanvese.mu = parse_num<double>(value, key);
    else if (key == "chanvese.dt") cfg.chanvese.dt = parse_num<double>(value, key);
    else if (key == "post.closing_radius") cfg.post.closing_radius = parse_num<int>(value, key);
    else if (key == "post.keep_largest") cfg.post.keep_largest = parse_bool(value, key);
    else if (key == "hair.line_length") cfg.hair.line_length = parse_num<int>(value, key);
    else if (key == "hair.orientations") cfg.hair.orientations = parse_num<int>(value, key);
    else if (key == "hair.hair_threshold") cfg.hair.hair_threshold = parse_num<double>(value, key);
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

/// Parses a config stream. Lines are `key=value`; blank lines and lines
/// starting with '#' are ignored; whitespace around key and value is trimmed.
inline PipelineConfig parse_config(std::istream& in, PipelineConfig cfg = {}) {
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value, got '" + t + "'");
        try {
            apply_config_entry(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

inline PipelineConfig load_config(const std::string& path, PipelineConfig cfg = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    try {
        return parse_config(in, std::move(cfg));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

}  // namespace lesionseg
