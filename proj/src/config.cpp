#include "chanstab/config.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace chanstab {

void ChannelConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
    if (!(d > 0.0)) fail("d must be > 0");
    if (!(L > 0.0 && L < 0.5)) fail("L must lie in (0, 1/2)");
    if (!(A1 > 0.0 && A1 < 0.5)) fail("A1 must lie in (0, 1/2)");
    if (!(eps > 0.0 && eps < A1)) fail("eps must lie in (0, A1)");
    if (!(nu > 0.0)) fail("nu must be > 0");
    if (!(beta > 0.0)) fail("beta must be > 0");
    if (gamma > 0.0 && !(gamma > 0.0)) fail("gamma must be > 0");
    if (lambda0 > 0.0 && !(lambda0 > beta)) fail("lambda0 must exceed beta");
    if (nx < 8 || ny < 8) fail("nx, ny must be >= 8");
    if (!(dt > 0.0)) fail("dt must be > 0");
    if (!(t_end > 0.0)) fail("t_end must be > 0");
    if (n_margin < 0) fail("n_margin must be >= 0");
    if (!(tol_eig > 0.0 && tol_are > 0.0 && tol_hautus > 0.0)) fail("tolerances must be > 0");
    if (!(T1() > T_A1())) fail("derived times must satisfy T1 > T_A1");
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

ChannelConfig parse_config_text(const std::string& text, const std::string& origin) {
    ChannelConfig cfg;
    std::map<std::string, std::function<void(const std::string&)>> setters;
    auto dbl = [&](double& slot) {
        return [&slot](const std::string& v) { slot = std::stod(v); };
    };
    auto integer = [&](int& slot) {
        return [&slot](const std::string& v) { slot = std::stoi(v); };
    };
    setters["d"] = dbl(cfg.d);
    setters["L"] = dbl(cfg.L);
    setters["A1"] = dbl(cfg.A1);
    setters["eps"] = dbl(cfg.eps);
    setters["nu"] = dbl(cfg.nu);
    setters["beta"] = dbl(cfg.beta);
    setters["gamma"] = dbl(cfg.gamma);
    setters["lambda0"] = dbl(cfg.lambda0);
    setters["nx"] = integer(cfg.nx);
    setters["ny"] = integer(cfg.ny);
    setters["dt"] = dbl(cfg.dt);
    setters["t_end"] = dbl(cfg.t_end);
    setters["n_margin"] = integer(cfg.n_margin);
    setters["tol_eig"] = dbl(cfg.tol_eig);
    setters["tol_are"] = dbl(cfg.tol_are);
    setters["tol_hautus"] = dbl(cfg.tol_hautus);

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end()) {
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
        }
        try {
            it->second(value);
        } catch (const std::exception&) {
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": bad value '" + value + "' for key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

ChannelConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string config_to_text(const ChannelConfig& cfg) {
    char buf[64];
    std::ostringstream out;
    auto put = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << key << " = " << buf << "\n";
    };
    put("d", cfg.d);
    put("L", cfg.L);
    put("A1", cfg.A1);
    put("eps", cfg.eps);
    put("nu", cfg.nu);
    put("beta", cfg.beta);
    put("gamma", cfg.gamma);
    put("lambda0", cfg.lambda0);
    out << "nx = " << cfg.nx << "\n";
    out << "ny = " << cfg.ny << "\n";
    put("dt", cfg.dt);
    put("t_end", cfg.t_end);
    out << "n_margin = " << cfg.n_margin << "\n";
    put("tol_eig", cfg.tol_eig);
    put("tol_are", cfg.tol_are);
    put("tol_hautus", cfg.tol_hautus);
    return out.str();
}

std::string config_hash(const ChannelConfig& cfg, double beta_eff) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "beta_eff = %.17g\n", beta_eff);
    const std::string text = config_to_text(cfg) + buf;
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char out[24];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

}  // namespace chanstab
