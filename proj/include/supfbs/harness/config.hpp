// Experiment configuration: a flat key = value text format with command-line
// overrides, algorithm specifications and the default parameter table.
//
// Grammar, one setting per line:
//     line    := blank | comment | setting
//     comment := '#' anything
//     setting := key '=' value          (whitespace around key and value ignored)
//     key     := name | label '.' name  (the second form overrides one algorithm)
// A '#' after a value starts a comment too. Later settings replace earlier ones.
#pragma once

#include "../fbs.hpp"
#include "../superior.hpp"
#include "../tomo.hpp"
#include "instance.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace supfbs {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One algorithm of an experiment: a superiorized variant (by its name, e.g.
/// "GradSupCG") or a forward-backward run written "afbs:<splitting>:<inner>"
/// (accelerated) or "fbs:<splitting>:<inner>" (plain), e.g. "afbs:natural:pd_noinv";
/// a fourth field ":nonneg" adds the nonnegativity constraint.
/// A trailing "@tag" keeps two runs of the same algorithm apart ("GradSupCG@slow").
struct AlgorithmSpec {
    std::string label;
    bool superiorized = true;
    SupVariant variant = SupVariant::GradSupCG;
    SplittingKind splitting = SplittingKind::NaturalLS;
    InnerSolver inner = InnerSolver::ExactSMW;
    bool accelerated = true;
    bool nonneg = false;  ///< forward-backward runs only
    std::map<std::string, std::string> overrides;
};

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',')
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

inline AlgorithmSpec parse_algorithm(const std::string& text)
{
    AlgorithmSpec a;
    a.label = trim(text);
    const std::string name = a.label.substr(0, a.label.find('@'));
    if (a.label.find_first_of(". \t") != std::string::npos) {
        throw ConfigError("algorithm '" + a.label + "': labels may not contain '.' or blanks");
    }
    if (auto v = parse_variant(name)) {
        a.variant = *v;
        return a;
    }
    const auto parts = split_list(name, ':');
    if ((parts.size() == 3 || (parts.size() == 4 && parts[3] == "nonneg")) &&
        (parts[0] == "afbs" || parts[0] == "fbs")) {
        const auto sp = parse_splitting(parts[1]);
        const auto in = parse_inner(parts[2]);
        if (sp && in) {
            a.superiorized = false;
            a.accelerated = parts[0] == "afbs";
            a.splitting = *sp;
            a.inner = *in;
            a.nonneg = parts.size() == 4;
            if ((*sp == SplittingKind::NaturalLS) == (*in == InnerSolver::TVProx)) {
                throw ConfigError("algorithm '" + a.label +
                                  "': the reversed splitting needs tv_prox, the natural one exact, "
                                  "pd_basic or pd_noinv");
            }
            return a;
        }
    }
    throw ConfigError("unknown algorithm '" + a.label + "'");
}

inline const std::vector<std::string>& sup_override_keys()
{
    static const std::vector<std::string> k = {"a", "gamma0", "kappa", "eps", "mu", "lw_gamma",
                                               "prox_tol", "max_outer"};
    return k;
}

inline const std::vector<std::string>& fbs_override_keys()
{
    static const std::vector<std::string> k = {"alpha", "a", "t0", "C", "q", "max_inner",
                                               "max_outer", "warm_start", "tv_prox_tol",
                                               "sharpen_w"};
    return k;
}

struct ExperimentConfig {
    Index side = 128;
    std::size_t n_angles = 20;
    Index n_rays = 128;
    PhantomVariant phantom = PhantomVariant::Modified;
    std::string data_dir;  ///< load A.mtx, x_true.raw, b.raw from here instead of building

    bool noise = false;
    double noise_level = 0.02;
    std::uint64_t noise_seed = 0;
    std::uint64_t power_seed = 0;

    std::optional<double> lambda;  ///< default 0.01 exact, 1.6529 noisy
    double tau = 0.01;
    std::optional<double> eps;     ///< default 0.001 exact, 0.047 m noisy
    double mu_factor = 1e-6;       ///< mu = mu_factor ||A||^2
    double lw_factor = 1.9;        ///< Landweber step lw_factor / ||A||^2
    int max_outer = 2000;
    bool run_past_stop = false;

    std::vector<AlgorithmSpec> algorithms;
    std::string output_dir = "out";
    bool write_svg = true;
    bool log_y = true;
    int jobs = 1;
};

namespace detail {

inline double to_double(const std::string& key, const std::string& v)
{
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) {
        throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
    }
    return out;
}

inline long long to_int(const std::string& key, const std::string& v)
{
    std::size_t pos = 0;
    long long out = 0;
    try {
        out = std::stoll(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) {
        throw ConfigError("'" + key + "': expected an integer, got '" + v + "'");
    }
    return out;
}

inline bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "1" || v == "true" || v == "on" || v == "yes") {
        return true;
    }
    if (v == "0" || v == "false" || v == "off" || v == "no") {
        return false;
    }
    throw ConfigError("'" + key + "': expected on/off, got '" + v + "'");
}

inline long long positive_int(const std::string& key, const std::string& v, long long min = 1)
{
    const long long x = to_int(key, v);
    if (x < min) {
        throw ConfigError("'" + key + "' must be >= " + std::to_string(min));
    }
    return x;
}

} // namespace detail

/// Applies one setting; throws ConfigError for unknown keys or bad values.
inline void apply_setting(ExperimentConfig& c, const std::string& key_in, const std::string& value_in)
{
    using namespace detail;
    const std::string key = trim(key_in), v = trim(value_in);
    if (const auto dot = key.find('.'); dot != std::string::npos) {
        const std::string label = key.substr(0, dot), name = key.substr(dot + 1);
        auto it = std::find_if(c.algorithms.begin(), c.algorithms.end(),
                               [&](const AlgorithmSpec& a) { return a.label == label; });
        if (it == c.algorithms.end()) {
            throw ConfigError("'" + key + "': algorithm '" + label + "' is not in the algorithm list");
        }
        const auto& allowed = it->superiorized ? sup_override_keys() : fbs_override_keys();
        if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
            throw ConfigError("'" + key + "': unknown parameter '" + name + "'");
        }
        if (name == "kappa" || name == "max_inner" || name == "max_outer") {
            positive_int(key, v, 0);
        } else if (name == "warm_start" || name == "sharpen_w") {
            to_bool(key, v);
        } else {
            to_double(key, v);
        }
        it->overrides[name] = v;
        return;
    }
    if (key == "side") {
        c.side = positive_int(key, v, 2);
    } else if (key == "angles") {
        c.n_angles = static_cast<std::size_t>(positive_int(key, v));
    } else if (key == "rays") {
        c.n_rays = positive_int(key, v);
    } else if (key == "phantom") {
        if (v == "modified") {
            c.phantom = PhantomVariant::Modified;
        } else if (v == "original") {
            c.phantom = PhantomVariant::Original;
        } else {
            throw ConfigError("'phantom': expected modified or original, got '" + v + "'");
        }
    } else if (key == "data_dir") {
        c.data_dir = v;
    } else if (key == "noise") {
        c.noise = to_bool(key, v);
    } else if (key == "noise_level") {
        c.noise_level = to_double(key, v);
        if (c.noise_level < 0.0) {
            throw ConfigError("'noise_level' must be >= 0");
        }
    } else if (key == "noise_seed") {
        c.noise_seed = static_cast<std::uint64_t>(positive_int(key, v, 0));
    } else if (key == "power_seed") {
        c.power_seed = static_cast<std::uint64_t>(positive_int(key, v, 0));
    } else if (key == "lambda") {
        c.lambda = to_double(key, v);
    } else if (key == "tau") {
        c.tau = to_double(key, v);
        if (!(c.tau > 0.0)) {
            throw ConfigError("'tau' must be positive");
        }
    } else if (key == "eps") {
        c.eps = to_double(key, v);
    } else if (key == "mu_factor") {
        c.mu_factor = to_double(key, v);
    } else if (key == "lw_factor") {
        c.lw_factor = to_double(key, v);
    } else if (key == "max_outer") {
        c.max_outer = static_cast<int>(positive_int(key, v, 0));
    } else if (key == "run_past_stop") {
        c.run_past_stop = to_bool(key, v);
    } else if (key == "algorithms") {
        c.algorithms.clear();
        for (const auto& s : split_list(v)) {
            AlgorithmSpec a = parse_algorithm(s);
            for (const auto& b : c.algorithms) {
                if (b.label == a.label) {
                    throw ConfigError("algorithm '" + a.label + "' listed twice; add an @tag");
                }
            }
            c.algorithms.push_back(std::move(a));
        }
    } else if (key == "output_dir") {
        c.output_dir = v;
    } else if (key == "svg") {
        c.write_svg = to_bool(key, v);
    } else if (key == "log_y") {
        c.log_y = to_bool(key, v);
    } else if (key == "jobs") {
        c.jobs = static_cast<int>(positive_int(key, v));
    } else {
        throw ConfigError("unknown setting '" + key + "'");
    }
}

/// "key=value" as given on the command line.
inline void apply_override(ExperimentConfig& c, const std::string& kv)
{
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override '" + kv + "' is not of the form key=value");
    }
    apply_setting(c, kv.substr(0, eq), kv.substr(eq + 1));
}

/// Settings are applied in file order, except that `algorithms` is applied
/// first so per-algorithm keys may appear anywhere.
inline void parse_config(std::istream& is, ExperimentConfig& c)
{
    std::vector<std::pair<std::string, std::string>> settings;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || trim(line.substr(0, eq)).empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        settings.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    for (const auto& [k, v] : settings) {
        if (k == "algorithms") {
            apply_setting(c, k, v);
        }
    }
    for (const auto& [k, v] : settings) {
        if (k != "algorithms") {
            apply_setting(c, k, v);
        }
    }
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot open config file " + path);
    }
    ExperimentConfig c;
    parse_config(is, c);
    return c;
}

// --- default parameters ----------------------------------------------------

/// Per-variant defaults: (a, gamma0, kappa) for the S_grad variants, (gamma0, a)
/// for the prox variants, with gamma0 = 1.9 lambda / ||A||^2 for ProxCSupCG,
/// ProxCSupLW and ProxSupProjLW.
inline SupConfig sup_defaults(SupVariant v, double lambda, double norm_a_sq, double mu_factor = 1e-6,
                              double lw_factor = 1.9)
{
    SupConfig c;
    c.variant = v;
    c.mu = mu_factor * norm_a_sq;
    c.lw_gamma = lw_factor / norm_a_sq;
    switch (v) {
    case SupVariant::GradSupCG:
        c.a = 1.0 - 1e-4;
        c.gamma0 = 0.001;
        c.kappa = 20;
        break;
    case SupVariant::GradSupLW:
    case SupVariant::GradSupProjLW:
        c.a = 1.0 - 1e-4;
        c.gamma0 = 0.0025;
        c.kappa = 20;
        break;
    case SupVariant::ProxSupCG:
    case SupVariant::ProxSupLW:
        c.gamma0 = 0.001;
        c.a = 1.0 - 1e-6;
        break;
    case SupVariant::ProxCSupCG:
    case SupVariant::ProxCSupLW:
    case SupVariant::ProxSupProjLW:
        c.gamma0 = 1.9 * lambda / norm_a_sq;
        c.a = 1.0 - 1e-6;
        break;
    }
    return c;
}

/// Defaults resolved against a data set, with the algorithm's overrides applied.
inline SupConfig resolve_sup(const AlgorithmSpec& s, const ExperimentConfig& c, const TomoData& d)
{
    using namespace detail;
    const double lambda = c.lambda.value_or(d.default_lambda());
    SupConfig out = sup_defaults(s.variant, lambda, d.norm_a_sq, c.mu_factor, c.lw_factor);
    out.eps = c.eps.value_or(d.default_eps());
    out.max_outer = c.max_outer;
    out.run_past_stop = c.run_past_stop;
    for (const auto& [k, v] : s.overrides) {
        const std::string key = s.label + "." + k;
        if (k == "a") {
            out.a = to_double(key, v);
        } else if (k == "gamma0") {
            out.gamma0 = to_double(key, v);
        } else if (k == "kappa") {
            out.kappa = static_cast<int>(to_int(key, v));
        } else if (k == "eps") {
            out.eps = to_double(key, v);
        } else if (k == "mu") {
            out.mu = to_double(key, v);
        } else if (k == "lw_gamma") {
            out.lw_gamma = to_double(key, v);
        } else if (k == "prox_tol") {
            out.prox_tol = to_double(key, v);
        } else if (k == "max_outer") {
            out.max_outer = static_cast<int>(to_int(key, v));
        }
    }
    return out;
}

inline AFBSConfig resolve_fbs(const AlgorithmSpec& s, const ExperimentConfig& c)
{
    using namespace detail;
    AFBSConfig out;
    out.splitting = s.splitting;
    out.inner = s.inner;
    out.accelerated = s.accelerated;
    out.max_outer = c.max_outer;
    out.run_past_stop = c.run_past_stop;
    for (const auto& [k, v] : s.overrides) {
        const std::string key = s.label + "." + k;
        if (k == "alpha") {
            out.alpha = to_double(key, v);
        } else if (k == "a") {
            out.a_relax = to_double(key, v);
        } else if (k == "t0") {
            out.t0 = to_double(key, v);
        } else if (k == "C") {
            out.inexact_C = to_double(key, v);
        } else if (k == "q") {
            out.inexact_q = to_double(key, v);
        } else if (k == "max_inner") {
            out.max_inner = static_cast<int>(to_int(key, v));
        } else if (k == "max_outer") {
            out.max_outer = static_cast<int>(to_int(key, v));
        } else if (k == "warm_start") {
            out.warm_start = to_bool(key, v);
        } else if (k == "tv_prox_tol") {
            out.tv_prox_tol = to_double(key, v);
        } else if (k == "sharpen_w") {
            out.sharpen_w = to_bool(key, v);
        }
    }
    return out;
}

} // namespace supfbs
