#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "regime_q/errors.hpp"
#include "regime_q/learn_loop.hpp"

namespace regime_q {

// Flat TOML subset: [section] headers, key = value, numbers, quoted strings, booleans and
// one-level numeric arrays. Keys are stored as "section.key".
using FlatConfig = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] == '"') quoted = !quoted;
        if (s[k] == '#' && !quoted) return s.substr(0, k);
    }
    return s;
}

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline FlatConfig parse_flat(const std::string& text) {
    FlatConfig out;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(detail::strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw config_error("line " + std::to_string(lineno) + ": unterminated section");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw config_error("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw config_error("line " + std::to_string(lineno) + ": empty key or value");
        out[section.empty() ? key : section + "." + key] = value;
    }
    return out;
}

namespace detail {

inline double to_number(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        throw config_error(key + ": expected a number, got '" + v + "'");
    }
    if (used != v.size()) throw config_error(key + ": expected a number, got '" + v + "'");
    return d;
}

inline std::vector<double> to_array(const std::string& key, const std::string& v) {
    if (v.size() < 2 || v.front() != '[' || v.back() != ']') throw config_error(key + ": expected an array");
    std::vector<double> out;
    std::stringstream ss(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_number(key, item));
    }
    return out;
}

inline std::string to_string_value(const std::string& key, const std::string& v) {
    if (v.size() < 2 || v.front() != '"' || v.back() != '"') throw config_error(key + ": expected a quoted string");
    return v.substr(1, v.size() - 2);
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw config_error(key + ": expected true or false");
}

inline std::string array_text(const std::vector<double>& a) {
    std::string s = "[";
    for (std::size_t k = 0; k < a.size(); ++k) s += (k ? ", " : "") + fmt17(a[k]);
    return s + "]";
}

}  // namespace detail

inline const char* schedule_names[4] = {"rho1", "rho2", "sigma1", "sigma2"};

/// emv_p1: Shannon entropy, martingale critic.
inline LearningConfig preset_emv_p1() {
    LearningConfig c;
    c.name = "emv_p1";
    c.market = MarketParams{{0.2, -0.2}, {0.2, 0.3}, {0.01, 0.05}, {-1.0, 1.0, 1.0, -1.0}};
    c.T = 1.0;
    c.K = 25;
    c.x0 = 1.0;
    c.z = 1.4;
    c.gamma = 0.5;
    c.n_paths = 100;
    c.n_iters = 6000;
    c.entropy_order = 1;
    c.algorithm = Algorithm::martingale;
    c.schedules = {RateSchedule{3.5e-3, 1500}, RateSchedule{2.6e-3, 1500}, RateSchedule{3.0e-3, 1000},
                   RateSchedule{2.0e-3, 1000}};
    c.init_ranges = {{{0.2, 0.5}, {-0.4, -0.1}, {0.15, 0.3}, {0.15, 0.3}}};
    c.theta_true = LearnParams{{0.95, -0.833, 0.2, 0.3}};
    return c;
}

/// emv_p2: Tsallis p = 2 entropy, actor-critic with Adam after the warm-up.
inline LearningConfig preset_emv_p2() {
    LearningConfig c;
    c.name = "emv_p2";
    c.market = MarketParams{{0.12, -0.10}, {0.15, 0.35}, {0.02, 0.025}, {-1.8, 1.8, 2.0, -2.0}};
    c.T = 1.0;
    c.K = 25;
    c.x0 = 1.0;
    c.z = 1.4;
    c.gamma = 0.5;
    c.n_paths = 50;
    c.n_iters = 5000;
    c.entropy_order = 2;
    c.algorithm = Algorithm::actor_critic;
    c.schedules = {RateSchedule{6.5e-3, 2000, true}, RateSchedule{6.5e-3, 2000, true},
                   RateSchedule{6.0e-4, 1500, true}, RateSchedule{3.0e-4, 1500, true}};
    c.w1 = 0.1;
    c.w2 = 0.5;
    c.init_ranges = {{{0.1, 0.25}, {-0.05, 0.1}, {0.2, 0.3}, {0.2, 0.3}}};
    c.theta_true = LearnParams{{0.733, -0.428, 0.15, 0.35}};
    return c;
}

inline LearningConfig preset(const std::string& name) {
    if (name == "emv_p1") return preset_emv_p1();
    if (name == "emv_p2") return preset_emv_p2();
    throw config_error("unknown preset '" + name + "' (expected emv_p1 or emv_p2)");
}

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::martingale: return "martingale";
        case Algorithm::actor_critic: return "actor_critic";
        case Algorithm::kl_actor: return "kl_actor";
    }
    return "martingale";
}

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "martingale" || s == "1") return Algorithm::martingale;
    if (s == "actor_critic" || s == "2") return Algorithm::actor_critic;
    if (s == "kl_actor" || s == "3") return Algorithm::kl_actor;
    throw config_error("unknown algorithm '" + s + "'");
}

/// Applies the keys in `f` on top of `base`. Unknown keys are rejected.
inline LearningConfig apply_flat(LearningConfig c, const FlatConfig& f) {
    using namespace detail;
    for (const auto& [key, v] : f) {
        auto num = [&] { return to_number(key, v); };
        auto integer = [&] {
            const double d = num();
            if (d != static_cast<double>(static_cast<long long>(d))) throw config_error(key + ": expected an integer");
            return static_cast<long long>(d);
        };
        auto vec = [&](std::size_t n) {
            auto a = to_array(key, v);
            if (n && a.size() != n) throw config_error(key + ": expected " + std::to_string(n) + " entries");
            return a;
        };
        if (key == "name") c.name = to_string_value(key, v);
        else if (key == "market.mu") c.market.mu = vec(0);
        else if (key == "market.sigma") c.market.sigma = vec(0);
        else if (key == "market.r") c.market.r = vec(0);
        else if (key == "market.generator") c.market.generator = vec(0);
        else if (key == "learning.T") c.T = num();
        else if (key == "learning.K") c.K = static_cast<int>(integer());
        else if (key == "learning.x0") c.x0 = num();
        else if (key == "learning.z") c.z = num();
        else if (key == "learning.gamma") c.gamma = num();
        else if (key == "learning.n_paths") c.n_paths = static_cast<int>(integer());
        else if (key == "learning.n_iters") c.n_iters = static_cast<int>(integer());
        else if (key == "learning.seed") c.seed = static_cast<std::uint64_t>(integer());
        else if (key == "learning.entropy_order") c.entropy_order = static_cast<int>(integer());
        else if (key == "learning.algorithm") c.algorithm = parse_algorithm(to_string_value(key, v));
        else if (key == "learning.w1") c.w1 = num();
        else if (key == "learning.w2") c.w2 = num();
        else if (key == "learning.adam_beta1") c.adam.beta1 = num();
        else if (key == "learning.adam_beta2") c.adam.beta2 = num();
        else if (key == "learning.adam_eps") c.adam.eps = num();
        else if (key == "learning.a_min") c.interval.lo = num();
        else if (key == "learning.a_max") c.interval.hi = num();
        else if (key == "learning.euler_form") c.euler_form = parse_euler_form(to_string_value(key, v));
        else if (key == "learning.clamp_actions") c.clamp_actions = to_bool(key, v);
        else if (key == "learning.substeps") c.substeps = static_cast<int>(integer());
        else if (key == "learning.fd_step") c.fd_step = num();
        else if (key == "learning.beta") c.beta = num();
        else if (key == "learning.initial_regime") c.initial_regime = static_cast<int>(integer());
        else if (key == "learning.theta_true") {
            const auto a = vec(4);
            for (std::size_t j = 0; j < 4; ++j) c.theta_true[j] = a[j];
        } else if (key.rfind("learning.init_", 0) == 0) {
            const std::string which = key.substr(14);
            bool found = false;
            for (std::size_t j = 0; j < 4; ++j)
                if (which == schedule_names[j]) {
                    const auto a = vec(2);
                    c.init_ranges[j] = {a[0], a[1]};
                    found = true;
                }
            if (!found) throw config_error("unknown key '" + key + "'");
        } else if (key.rfind("schedules.", 0) == 0) {
            const auto dot = key.find('.', 10);
            const std::string which = key.substr(10, dot == std::string::npos ? std::string::npos : dot - 10);
            const std::string field = dot == std::string::npos ? "" : key.substr(dot + 1);
            std::size_t j = 4;
            for (std::size_t k = 0; k < 4; ++k)
                if (which == schedule_names[k]) j = k;
            if (j == 4) throw config_error("unknown schedule '" + which + "'");
            RateSchedule& s = c.schedules[j];
            if (field == "rate") s.rate = num();
            else if (field == "hold") s.hold = static_cast<int>(integer());
            else if (field == "after") {
                const std::string mode = to_string_value(key, v);
                if (mode == "adam") s.adam_after = true;
                else if (mode == "decay") s.adam_after = false;
                else throw config_error(key + ": expected \"adam\" or \"decay\"");
            } else if (field == "decay") s.decay = num();
            else if (field == "every") s.every = static_cast<int>(integer());
            else throw config_error("unknown key '" + key + "'");
        } else {
            throw config_error("unknown key '" + key + "'");
        }
    }
    return c;
}

/// Parses a config text. An optional top-level `preset = "..."` supplies defaults.
inline LearningConfig load_config_text(const std::string& text) {
    FlatConfig f = parse_flat(text);
    LearningConfig base = preset_emv_p1();
    if (auto it = f.find("preset"); it != f.end()) {
        base = preset(detail::to_string_value("preset", it->second));
        f.erase(it);
    }
    LearningConfig c = apply_flat(base, f);
    validate(c);
    return c;
}

inline LearningConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config_text(ss.str());
}

inline std::string serialize(const LearningConfig& c) {
    using detail::array_text;
    using detail::fmt17;
    std::ostringstream o;
    o << "name = \"" << c.name << "\"\n\n[market]\n";
    o << "mu = " << array_text(c.market.mu) << "\n";
    o << "sigma = " << array_text(c.market.sigma) << "\n";
    o << "r = " << array_text(c.market.r) << "\n";
    o << "generator = " << array_text(c.market.generator) << "\n\n[learning]\n";
    o << "T = " << fmt17(c.T) << "\nK = " << c.K << "\nx0 = " << fmt17(c.x0) << "\nz = " << fmt17(c.z) << "\n";
    o << "gamma = " << fmt17(c.gamma) << "\nn_paths = " << c.n_paths << "\nn_iters = " << c.n_iters << "\n";
    o << "seed = " << c.seed << "\nentropy_order = " << c.entropy_order << "\n";
    o << "algorithm = \"" << to_string(c.algorithm) << "\"\n";
    o << "w1 = " << fmt17(c.w1) << "\nw2 = " << fmt17(c.w2) << "\n";
    o << "adam_beta1 = " << fmt17(c.adam.beta1) << "\nadam_beta2 = " << fmt17(c.adam.beta2) << "\n";
    o << "adam_eps = " << fmt17(c.adam.eps) << "\n";
    o << "a_min = " << fmt17(c.interval.lo) << "\na_max = " << fmt17(c.interval.hi) << "\n";
    o << "euler_form = \"" << to_string(c.euler_form) << "\"\n";
    o << "clamp_actions = " << (c.clamp_actions ? "true" : "false") << "\n";
    o << "substeps = " << c.substeps << "\nfd_step = " << fmt17(c.fd_step) << "\nbeta = " << fmt17(c.beta) << "\n";
    o << "initial_regime = " << c.initial_regime << "\n";
    o << "theta_true = " << array_text({c.theta_true.v.begin(), c.theta_true.v.end()}) << "\n";
    for (std::size_t j = 0; j < 4; ++j)
        o << "init_" << schedule_names[j] << " = " << array_text({c.init_ranges[j][0], c.init_ranges[j][1]}) << "\n";
    for (std::size_t j = 0; j < 4; ++j) {
        const RateSchedule& s = c.schedules[j];
        o << "\n[schedules." << schedule_names[j] << "]\n";
        o << "rate = " << fmt17(s.rate) << "\nhold = " << s.hold << "\n";
        o << "after = \"" << (s.adam_after ? "adam" : "decay") << "\"\n";
        o << "decay = " << fmt17(s.decay) << "\nevery = " << s.every << "\n";
    }
    return o.str();
}

}  // namespace regime_q
