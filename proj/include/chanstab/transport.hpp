#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "chanstab/fields.hpp"

namespace chanstab {

/// Velocity of the characteristic flow: the Poiseuille profile extended to
/// the plane (parabolic inside the strip, zero outside) plus an optional
/// perturbation that vanishes outside the channel.
struct FlowSampler {
    std::function<Vec2(double x, double y, double t)> extra;  // may be empty

    Vec2 velocity(double x, double y, double t) const {
        Vec2 v{(y > 0.0 && y < 1.0) ? y * (1.0 - y) : 0.0, 0.0};
        if (extra) {
            const Vec2 e = extra(x, y, t);
            v.x += e.x;
            v.y += e.y;
        }
        return v;
    }
};

/// Time-sampled shifted velocity history with linear interpolation between
/// snapshots (used by flow-map checks and localized-energy backtracking).
struct VelocityHistory {
    double t0 = 0.0;
    double dt_snap = 0.0;
    std::vector<StaggeredVelocityField> fields;

    bool empty() const { return fields.empty(); }
    double t_last() const { return t0 + dt_snap * (fields.empty() ? 0 : fields.size() - 1); }
    /// Space-time evaluation; zero outside the channel.
    Vec2 eval(double x, double y, double t) const;
    /// Discrete V^{2,1} surrogate norm of the stored history.
    double norm_v21() const;
};

/// X(x, t, s): RK4 integration of the characteristics from time s to time t
/// (backwards when t < s) with substeps bounded by max_step.
Vec2 integrate_flow(const FlowSampler& flow, Vec2 x, double t, double s, double max_step);

/// Closed-form reference flow of the extended Poiseuille field.
inline Vec2 reference_flow(Vec2 x, double t, double s) {
    if (x.y > 0.0 && x.y < 1.0) return {x.x + (t - s) * x.y * (1.0 - x.y), x.y};
    return x;
}

/// Exact solution of the linear transport problem at the Poiseuille
/// velocity with zero inflow data (beta-shifted form).
double linear_transport_exact(const std::function<double(double, double)>& sigma0, double x1,
                              double x2, double t, double beta);

struct DensityState {
    ScalarGridField sigma;
    double t = 0.0;

    /// Bounding box (cell index ranges) of cells with |sigma| > threshold;
    /// nullopt when the field is identically below the threshold.
    struct Support {
        int i_min, i_max, j_min, j_max;
    };
    std::optional<Support> support(double threshold = 0.0) const;
    double max_abs() const { return sigma.max_abs(); }
};

/// One semi-Lagrangian step of the shifted transport equation:
/// sigma(x, t+dt) = e^{beta dt} sigma(foot, t) with bilinear interpolation
/// extended by zero outside the channel (zero inflow data). The optional
/// feet output receives the backtracked foot per cell for reuse.
DensityState step_density(const DensityState& state, const FlowSampler& flow, double dt,
                          double beta, std::vector<Vec2>* feet_out = nullptr,
                          double max_substep = 0.0);

/// Bilinear sample of a cell-centered field extended by zero outside.
double interp_zero(const ScalarGridField& s, double x, double y);

/// Localized energy E_loc(t) = 0.5 int Psi |sigma|^2 with
/// Psi(x,t) = theta(X(x,0,t)) evaluated by direct backtracking through the
/// given flow.
double localized_energy(const Geometry& geo, const ScalarGridField& sigma, double t,
                        const FlowSampler& flow, double max_substep);

/// Incremental tracker of the time-zero preimage map X(x, 0, t) for the
/// localized-energy diagnostic along a run. Feet from step_density are
/// composed into the stored map; exited points continue analytically with
/// the extended Poiseuille drift.
class PreimageTracker {
  public:
    explicit PreimageTracker(const GridGeometry& g);
    void advance(const std::vector<Vec2>& feet, double t_before_step);
    double localized_energy(const Geometry& geo, const ScalarGridField& sigma) const;
    Vec2 preimage(int i, int j) const { return {fx_(i, j), fy_(i, j)}; }

  private:
    GridGeometry g_;
    Eigen::ArrayXXd fx_, fy_;
};

struct ExtinctionReport {
    bool extinct_by_T1 = false;
    double first_extinct_time = -1.0;  // first sampled time with empty support
    double sup_after_T1 = 0.0;         // max over t >= T1 of |sigma|_inf e^{-beta t}
    double threshold = 0.0;
    bool pass = false;
};

/// Checks finite-time extinction against the series (t_k, |sigma(t_k)|_inf):
/// for every t >= T1 the sup norm must stay below eps_machine * e^{beta t}
/// relative to the initial magnitude.
ExtinctionReport extinction_check(const std::vector<std::pair<double, double>>& sup_series,
                                  double T1, double beta, double sigma0_scale);

struct FlowDeviationReport {
    double sup_deviation = 0.0;
    double y_norm_v21 = 0.0;
    double ratio = 0.0;  // sup_deviation / |y|_{V^{2,1}}
};

/// Samples |X - X0| over a grid of points and time pairs for the perturbed
/// flow induced by the shifted velocity history.
FlowDeviationReport check_flow_deviation(const VelocityHistory& hist, double beta, int n_space,
                                         int n_time, double max_substep);

struct TransportOracleRow {
    int n = 0;
    double h = 0.0;
    double err_linf = 0.0;
    double observed_order = 0.0;
};

/// Convergence study of the y = 0 solver against the closed-form solution;
/// smooth compactly supported initial data.
std::vector<TransportOracleRow> transport_oracle_study(const ChannelConfig& base,
                                                       const std::vector<int>& grids,
                                                       double t_final);

}  // namespace chanstab
