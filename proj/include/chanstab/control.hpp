#pragma once

#include <string>
#include <vector>

#include "chanstab/oseen.hpp"

namespace chanstab {

/// Orthonormal actuator shapes spanning the control space, together with
/// their stationary liftings.
struct ControlBasis {
    std::vector<BoundaryProfile> profiles;                  // g_1..g_Nc
    std::vector<OseenOperator::LiftedField> liftings;       // D_A g_j
    std::vector<Eigen::VectorXd> projected_liftings;        // P D_A g_j (interior dofs)
    Eigen::MatrixXd gram;                                   // Gamma inner products
    int size() const { return static_cast<int>(profiles.size()); }
};

/// Collects Re/Im control traces of the unstable adjoint eigenvectors,
/// drops near-dependent candidates and orthonormalizes. Throws when every
/// candidate trace is negligible (stabilizability would fail).
ControlBasis build_control_basis(const OseenOperator& op, const SpectralData& spectral,
                                 double rank_tol = 1e-8);

struct HautusReport {
    std::vector<std::complex<double>> eigenvalues;  // distinct unstable eigenvalues
    std::vector<double> smallest_singular_values;
    double tol = 0.0;
    bool pass = false;
};

/// Smallest singular value of [<g_j, B* phi>] over ker(lambda I - A*) for
/// each distinct unstable eigenvalue (report only; never throws).
HautusReport hautus_check(const OseenOperator& op, const SpectralData& spectral,
                          const ControlBasis& basis);

/// Reduced extended model: the top invariant subspace of A (unstable modes
/// plus margin) coupled with the actuator-amplitude states.
struct ReducedExtendedSystem {
    GridGeometry grid;
    int n_modes = 0;     // real dimensions of the velocity block
    int n_controls = 0;  // N_c
    double gamma = 0.0;
    double lambda0 = 0.0;
    Eigen::MatrixXd A_r;      // n_modes x n_modes, real block form of A
    Eigen::MatrixXd B_r;      // n_modes x N_c coupling
    Eigen::MatrixXd A_tilde;  // [[A_r, B_r], [0, -gamma I]]
    Eigen::MatrixXd J_tilde;  // [[0], [I]]
    std::vector<Eigen::VectorXd> basis_fields;  // real invariant basis of A
    std::vector<Eigen::VectorXd> dual_fields;   // reduction functionals xi_i
    std::vector<std::complex<double>> eigenvalues;  // one entry per mode group
    double max_imag_residue = 0.0;  // realification consistency diagnostic

    int n_r() const { return n_modes + n_controls; }
    /// Modal coordinates of an interior dof field: coords_i = <y, xi_i>_V0.
    Eigen::VectorXd reduce(const Eigen::VectorXd& y_interior) const;
    /// Field reconstruction from modal coordinates.
    Eigen::VectorXd prolong(const Eigen::VectorXd& coords) const;
};

/// Builds the reduced extended system from the adjoint spectral data and the
/// control basis; computes the direct invariant basis internally.
ReducedExtendedSystem assemble_extended(const OseenOperator& op, const SpectralData& spectral,
                                        const ControlBasis& basis, unsigned seed);

struct FeedbackGain {
    Eigen::MatrixXd P;    // Riccati solution on the reduced space
    Eigen::MatrixXd K;    // -J^T P
    Eigen::MatrixXd Acl;  // A_tilde + J_tilde K
    double riccati_residual_rel = 0.0;  // state-cost-free residual
    double min_eig_P = 0.0;
    double spectral_abscissa = 0.0;
    std::string route;  // "bernoulli" or "bernoulli_rho"
    double rho = 0.0;   // state weight used by the fallback route
};

/// Continuous algebraic Riccati equation A^T P + P A - P B B^T P + Q = 0,
/// stabilizing solution via the matrix sign function of the Hamiltonian.
Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q);

/// Stabilizing feedback for the reduced extended system. Tries the
/// state-cost-free equation first; when the exact solution is singular on
/// the stable modes, retries with a vanishing state weight rho I, shrinking
/// rho until the residual and definiteness requirements hold.
FeedbackGain solve_riccati(const ReducedExtendedSystem& sys, double tol_are);

/// phi_c = K (coords, w_c); linear in the state.
Eigen::VectorXd feedback(const FeedbackGain& gain, const Eigen::VectorXd& coords,
                         const Eigen::VectorXd& w_c);

}  // namespace chanstab
