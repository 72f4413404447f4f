#include "fpol/config.hpp"

#include "fpol/output.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fpol {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& message) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + message);
}

double parse_double(const std::string& origin, int line, const std::string& key,
                    const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0' || !std::isfinite(v))
        fail(origin, line, "key '" + key + "': expected a finite number, got '" + value + "'");
    return v;
}

int parse_int(const std::string& origin, int line, const std::string& key,
              const std::string& value) {
    char* end = nullptr;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        fail(origin, line, "key '" + key + "': expected an integer, got '" + value + "'");
    return static_cast<int>(v);
}

bool parse_bool(const std::string& origin, int line, const std::string& key,
                const std::string& value) {
    if (value == "true")
        return true;
    if (value == "false")
        return false;
    fail(origin, line, "key '" + key + "': expected true or false, got '" + value + "'");
}

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::map<std::string, std::function<void(int, const std::string&, const std::string&)>>
        handlers;

    const auto set_double = [&](double& target) {
        return [&target, &origin](int line, const std::string& key, const std::string& value) {
            target = parse_double(origin, line, key, value);
        };
    };
    const auto set_int = [&](int& target) {
        return [&target, &origin](int line, const std::string& key, const std::string& value) {
            target = parse_int(origin, line, key, value);
        };
    };
    const auto set_bool = [&](bool& target) {
        return [&target, &origin](int line, const std::string& key, const std::string& value) {
            target = parse_bool(origin, line, key, value);
        };
    };
    const auto set_opt_double = [&](std::optional<double>& target) {
        return [&target, &origin](int line, const std::string& key, const std::string& value) {
            target = parse_double(origin, line, key, value);
        };
    };

    handlers["cavity.delta0"] = set_double(cfg.spec.delta0);
    handlers["cavity.omega_t"] = set_double(cfg.spec.omega_t);
    handlers["cavity.kappa"] = set_double(cfg.spec.kappa);
    handlers["cavity.n_modes"] = set_int(cfg.spec.geom.n_cavity_modes);
    handlers["drive.b_m"] = set_double(cfg.spec.drive.b_m);
    handlers["drive.epsilon"] = set_double(cfg.spec.drive.epsilon);
    handlers["drive.alpha_max"] = set_int(cfg.spec.drive.alpha_max);
    handlers["drive.renormalize"] = set_bool(cfg.spec.drive.renormalize);
    handlers["medium.waist_ratio"] = set_double(cfg.spec.geom.delta);
    handlers["medium.w0_over_q"] = set_double(cfg.spec.geom.w0_over_q);
    handlers["medium.n_atom_modes"] = set_int(cfg.spec.geom.n_atom_modes);
    handlers["medium.eta_atom"] = set_double(cfg.spec.eta_atom);
    handlers["medium.omega_trap"] = set_double(cfg.spec.omega_trap);
    handlers["coupling.lambda"] = set_opt_double(cfg.lambda);
    handlers["coupling.lambda_ratio_sq"] = set_opt_double(cfg.lambda_ratio_sq);
    handlers["sweep.omega_min"] = set_double(cfg.omega_min);
    handlers["sweep.omega_max"] = set_double(cfg.omega_max);
    handlers["sweep.omega_points"] = set_int(cfg.omega_points);
    handlers["sweep.axis_min"] = set_double(cfg.axis_min);
    handlers["sweep.axis_max"] = set_double(cfg.axis_max);
    handlers["sweep.axis_points"] = set_int(cfg.axis_points);
    handlers["sweep.bm_min"] = set_double(cfg.bm_min);
    handlers["sweep.bm_max"] = set_double(cfg.bm_max);
    handlers["sweep.bm_points"] = set_int(cfg.bm_points);
    handlers["sweep.eps_min"] = set_double(cfg.eps_min);
    handlers["sweep.eps_max"] = set_double(cfg.eps_max);
    handlers["sweep.eps_points"] = set_int(cfg.eps_points);
    handlers["sweep.window_min"] = set_double(cfg.window_min);
    handlers["sweep.window_max"] = set_double(cfg.window_max);
    handlers["sweep.ratio_min"] = set_double(cfg.ratio_min);
    handlers["sweep.ratio_max"] = set_double(cfg.ratio_max);
    handlers["sweep.coarse_points"] = set_int(cfg.coarse_points);
    handlers["sweep.entry"] = set_int(cfg.entry);
    handlers["sweep.omega_eval"] = set_double(cfg.omega_eval);
    handlers["output.prefix"] = [&cfg](int, const std::string&, const std::string& value) {
        cfg.prefix = value;
    };

    std::istringstream stream(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(stream, raw)) {
        ++line;
        const std::string stripped = trim(raw);
        if (stripped.empty() || stripped.front() == '#')
            continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']')
                fail(origin, line, "malformed section header '" + stripped + "'");
            section = stripped.substr(1, stripped.size() - 2);
            if (section != "cavity" && section != "drive" && section != "medium"
                && section != "coupling" && section != "sweep" && section != "output")
                fail(origin, line, "unknown section '[" + section + "]'");
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            fail(origin, line, "expected 'key = value', got '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (section.empty())
            fail(origin, line, "key '" + key + "' appears before any section header");
        const auto it = handlers.find(section + "." + key);
        if (it == handlers.end())
            fail(origin, line, "unknown key '" + key + "' in section [" + section + "]");
        it->second(line, key, value);
    }

    // Validation; every message names the offending key.
    const auto require = [&](bool ok, const std::string& key, const std::string& what) {
        if (!ok)
            throw ConfigError(origin + ": invalid value for '" + key + "': " + what);
    };
    require(std::isfinite(cfg.spec.delta0), "delta0", "must be finite");
    require(cfg.spec.omega_t > 0.0, "omega_t", "must be positive");
    require(cfg.spec.kappa >= 0.0, "kappa", "must be >= 0");
    require(cfg.spec.geom.n_cavity_modes >= 1, "n_modes", "must be >= 1");
    require(std::abs(cfg.spec.drive.b_m) <= 50.0, "b_m", "must satisfy |b_m| <= 50");
    require(cfg.spec.drive.alpha_max >= 0, "alpha_max", "must be >= 0");
    require(cfg.spec.geom.n_cavity_modes <= cfg.spec.drive.alpha_max + 1, "n_modes",
            "must be <= alpha_max + 1");
    require(cfg.spec.geom.delta > 0.0, "waist_ratio", "must be positive");
    require(cfg.spec.geom.w0_over_q > 0.0, "w0_over_q", "must be positive");
    require(cfg.spec.geom.n_atom_modes >= 1, "n_atom_modes", "must be >= 1");
    require(cfg.spec.eta_atom >= 0.0, "eta_atom", "must be >= 0");
    require(cfg.spec.omega_trap >= 0.0, "omega_trap", "must be >= 0");
    if (cfg.lambda)
        require(*cfg.lambda >= 0.0, "lambda", "must be >= 0");
    if (cfg.lambda_ratio_sq)
        require(*cfg.lambda_ratio_sq >= 0.0, "lambda_ratio_sq", "must be >= 0");
    require(!(cfg.lambda && cfg.lambda_ratio_sq), "lambda",
            "give either lambda or lambda_ratio_sq, not both");
    require(cfg.omega_points >= 1, "omega_points", "must be >= 1");
    require(cfg.omega_max >= cfg.omega_min, "omega_max", "must be >= omega_min");
    require(cfg.axis_points >= 1, "axis_points", "must be >= 1");
    require(cfg.axis_max >= cfg.axis_min, "axis_max", "must be >= axis_min");
    require(cfg.bm_points >= 1, "bm_points", "must be >= 1");
    require(cfg.bm_max >= cfg.bm_min, "bm_max", "must be >= bm_min");
    require(cfg.eps_points >= 1, "eps_points", "must be >= 1");
    require(cfg.eps_max >= cfg.eps_min, "eps_max", "must be >= eps_min");
    require(cfg.window_max > cfg.window_min, "window_max", "must be > window_min");
    require(cfg.ratio_min >= 0.0, "ratio_min", "must be >= 0");
    require(cfg.ratio_max > cfg.ratio_min, "ratio_max", "must be > ratio_min");
    require(cfg.coarse_points >= 2, "coarse_points", "must be >= 2");
    require(cfg.entry >= 0 && cfg.entry < cfg.spec.geom.n_cavity_modes, "entry",
            "must name a retained cavity mode");
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError(path + ": cannot open config file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path);
}

std::string RunConfig::resolved_text() const {
    std::ostringstream out;
    out << "[cavity]\n";
    out << "delta0 = " << format_double(spec.delta0) << "\n";
    out << "omega_t = " << format_double(spec.omega_t) << "\n";
    out << "kappa = " << format_double(spec.kappa) << "\n";
    out << "n_modes = " << spec.geom.n_cavity_modes << "\n";
    out << "[drive]\n";
    out << "b_m = " << format_double(spec.drive.b_m) << "\n";
    out << "epsilon = " << format_double(spec.drive.epsilon) << "\n";
    out << "alpha_max = " << spec.drive.alpha_max << "\n";
    out << "renormalize = " << (spec.drive.renormalize ? "true" : "false") << "\n";
    out << "[medium]\n";
    out << "waist_ratio = " << format_double(spec.geom.delta) << "\n";
    out << "w0_over_q = " << format_double(spec.geom.w0_over_q) << "\n";
    out << "n_atom_modes = " << spec.geom.n_atom_modes << "\n";
    out << "eta_atom = " << format_double(spec.eta_atom) << "\n";
    out << "omega_trap = " << format_double(spec.omega_trap) << "\n";
    out << "[coupling]\n";
    out << "lambda = " << (lambda ? format_double(*lambda) : "none") << "\n";
    out << "lambda_ratio_sq = "
        << (lambda_ratio_sq ? format_double(*lambda_ratio_sq) : "none") << "\n";
    out << "[sweep]\n";
    out << "omega_min = " << format_double(omega_min) << "\n";
    out << "omega_max = " << format_double(omega_max) << "\n";
    out << "omega_points = " << omega_points << "\n";
    out << "axis_min = " << format_double(axis_min) << "\n";
    out << "axis_max = " << format_double(axis_max) << "\n";
    out << "axis_points = " << axis_points << "\n";
    out << "bm_min = " << format_double(bm_min) << "\n";
    out << "bm_max = " << format_double(bm_max) << "\n";
    out << "bm_points = " << bm_points << "\n";
    out << "eps_min = " << format_double(eps_min) << "\n";
    out << "eps_max = " << format_double(eps_max) << "\n";
    out << "eps_points = " << eps_points << "\n";
    out << "window_min = " << format_double(window_min) << "\n";
    out << "window_max = " << format_double(window_max) << "\n";
    out << "ratio_min = " << format_double(ratio_min) << "\n";
    out << "ratio_max = " << format_double(ratio_max) << "\n";
    out << "coarse_points = " << coarse_points << "\n";
    out << "entry = " << entry << "\n";
    out << "omega_eval = " << format_double(omega_eval) << "\n";
    out << "[output]\n";
    out << "prefix = " << prefix << "\n";
    return out.str();
}

std::string RunConfig::config_hash() const { return fnv1a64_hex(resolved_text()); }

} // namespace fpol
