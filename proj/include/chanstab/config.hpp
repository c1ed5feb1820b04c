#pragma once

#include <string>

namespace chanstab {

/// Physical and numerical parameters of a channel run.
///
/// The channel is (0,d) x (0,1); the control zone is {0} x (L, 1-L) on the
/// inflow boundary; density perturbations are supported in the horizontal
/// band (A1, 1-A1) and eps < A1 is the extinction margin.
struct ChannelConfig {
    double d = 1.0;      // channel length
    double L = 0.2;      // control-zone margin, in (0, 1/2)
    double A1 = 0.3;     // density-support margin, in (0, 1/2)
    double eps = 0.1;    // extinction margin, in (0, A1)
    double nu = 0.05;    // viscosity
    double beta = 0.5;   // target decay rate (may be auto-raised by spectrum)
    double gamma = -1.0;   // control-ODE damping; <=0 means "derive as beta+1"
    double lambda0 = -1.0; // coercivity shift; <=0 means "derive as beta+2"
    int nx = 64;
    int ny = 64;
    double dt = 2e-3;
    double t_end = 12.0;
    int n_margin = 4;    // extra spectral modes beyond N_u
    double tol_eig = 1e-8;
    double tol_are = 1e-8;
    double tol_hautus = 1e-6;

    // Derived quantities.
    double plateau_offset() const { return L / 2.0; }            // delta_m
    double T_A1() const { return d / (A1 * (1.0 - A1)); }
    double T1() const { return (d + eps) / ((A1 - eps) * (1.0 - A1 + eps)); }
    double gamma_eff(double beta_eff) const { return gamma > 0.0 ? gamma : beta_eff + 1.0; }
    double lambda0_eff(double beta_eff) const { return lambda0 > 0.0 ? lambda0 : beta_eff + 2.0; }

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

/// Parses a plain-text "key = value" configuration file. Lines starting with
/// '#' and blank lines are skipped. Unknown keys are errors.
ChannelConfig load_config(const std::string& path);

/// Parses config text given directly (used by tests and load_config).
ChannelConfig parse_config_text(const std::string& text, const std::string& origin);

/// Canonical text form, one "key = value" per line, stable ordering.
std::string config_to_text(const ChannelConfig& cfg);

/// FNV-1a hash of the canonical text; identifies a synthesis setup so that
/// gain files cannot be replayed against a different grid or parameter set.
std::string config_hash(const ChannelConfig& cfg, double beta_eff);

}  // namespace chanstab
