#pragma once

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "chanstab/fields.hpp"

namespace chanstab {

struct EigenMode {
    std::complex<double> lambda;
    Eigen::VectorXcd phi;  // interior velocity dofs, ||phi||_V0 = 1
    Eigen::VectorXcd psi;  // recovered cell pressures (mean-free)
    double residual = 0.0;
};

struct SpectralData {
    std::vector<EigenMode> modes;  // sorted by decreasing Re, conjugates adjacent
    int n_unstable = 0;            // modes with Re(lambda) > 0
    int arnoldi_dim = 0;
};

/// Discretized Oseen operator around the Poiseuille profile, its adjoint,
/// the Dirichlet lifting, the boundary localization M and the control traces
/// B*. All actions live on the zero-trace discretely solenoidal subspace.
class OseenOperator {
  public:
    OseenOperator(const ChannelConfig& cfg, double beta_eff);

    const ChannelConfig& config() const { return cfg_; }
    const GridGeometry& grid() const { return g_; }
    const Geometry& geometry() const { return geo_; }
    const LerayProjector& leray() const { return *leray_; }
    double beta() const { return beta_; }
    double lambda0() const { return lambda0_; }

    /// A y  = nu P Lap y + beta y - P((vs.grad) y) - P((y.grad) vs).
    /// Input must be discretely solenoidal with zero trace; throws on
    /// divergence beyond `div_tol` times the field norm.
    Eigen::VectorXd apply_oseen(const Eigen::VectorXd& y, double div_tol = 1e-8) const;
    /// A* z = nu P Lap z + beta z + P((vs.grad) z) - P((grad vs)^T z).
    Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& z, double div_tol = 1e-8) const;
    Eigen::VectorXcd apply_adjoint_c(const Eigen::VectorXcd& z) const;
    Eigen::VectorXcd apply_oseen_c(const Eigen::VectorXcd& z) const;

    struct CoercivityReport {
        bool pass = false;
        double worst_ratio = 0.0;      // min <(l0-A)y,y> / (0.5 |y|_V1^2)
        double suggested_lambda0 = 0.0;
        double worst_ratio_adjoint = 0.0;
    };
    /// Samples random solenoidal zero-trace fields and tests the resolvent
    /// coercivity bound for A and A*; bisects the smallest restoring shift
    /// when the configured lambda0 fails.
    CoercivityReport verify_coercivity(int samples, unsigned seed) const;
    /// Same quadratic form test at a caller-chosen shift.
    double coercivity_gap(const Eigen::VectorXd& y, double lambda0, bool adjoint) const;

    struct LiftedField {
        StaggeredVelocityField velocity;
        ScalarGridField pressure;
    };
    /// Solves the stationary lifting system with Dirichlet data ub; the data
    /// must have zero net flux (compatibility) within `flux_tol`.
    LiftedField dirichlet_lift(const BoundaryProfile& ub, double flux_tol = 1e-10) const;
    /// Residual of a lifted pair in the discrete lifting equations (relative).
    double lift_residual(const LiftedField& lf, const BoundaryProfile& ub) const;

    /// Boundary localization: M g = m g - (m / int m)(int m g.n) n.
    BoundaryProfile localize_M(const BoundaryProfile& gprof) const;

    /// B* trace of a zero-trace field with recovered pressure:
    /// M(-nu dphi/dn + (psi - mean psi) n), supported in the control zone.
    BoundaryProfile apply_Bstar(const Eigen::VectorXd& phi, const Eigen::VectorXd& psi) const;

    /// All eigenvalues of A* (adjoint=true) or A near the top of the
    /// spectrum via shift-invert Arnoldi around lambda0, with explicitly
    /// verified residuals. `n_wanted` counts requested modes (real dims).
    SpectralData spectrum(bool adjoint, int n_wanted, unsigned seed) const;
    /// Adjoint spectrum plus axis guard: throws when an eigenvalue sits
    /// within tol_eig of the imaginary axis ("beta must be adjusted").
    SpectralData unstable_spectrum(unsigned seed) const;

    /// Resolvent-type saddle solve: (lambda0 I - A or A*) y + grad q = w,
    /// div y = 0, zero trace. Returns the velocity part.
    Eigen::VectorXd resolvent_solve(const Eigen::VectorXd& w, bool adjoint,
                                    Eigen::VectorXd* pressure = nullptr) const;

    /// Raw (un-projected) operator matrices; K_adj = K^T holds exactly.
    const Eigen::SparseMatrix<double>& K_direct() const { return K_; }
    const Eigen::SparseMatrix<double>& K_adjoint() const { return Kadj_; }

  private:
    void assemble();
    Eigen::VectorXd lift_rhs(const BoundaryProfile& ub) const;

    ChannelConfig cfg_;
    Geometry geo_;
    GridGeometry g_;
    double beta_;
    double lambda0_;
    std::unique_ptr<LerayProjector> leray_;
    Eigen::SparseMatrix<double> lap_, conv_, reac_;  // building blocks
    Eigen::SparseMatrix<double> K_, Kadj_;           // nu lap -/+ conv - reac/reac^T
    Eigen::SparseMatrix<double> saddle_dir_, saddle_adj_;
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_dir_, lu_adj_;
    int n_saddle_ = 0;
};

struct BetaResolution {
    double beta_eff = 0.0;
    bool raised = false;
    std::complex<double> top_eigen_before;  // at the configured beta
    int n_unstable_before = 0;
};

/// Chooses the effective decay rate: keeps cfg.beta when the shifted Oseen
/// operator already has N_u >= 1 and no eigenvalue near the axis, otherwise
/// raises beta just enough (the spectrum shifts exactly by the increment).
BetaResolution resolve_beta(const ChannelConfig& cfg, unsigned seed);

}  // namespace chanstab
