#include "chanstab/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace chanstab {

namespace {

/// Complex control trace of an eigenmode: B* applied to (Re, Im) parts.
std::pair<BoundaryProfile, BoundaryProfile> bstar_complex(const OseenOperator& op,
                                                          const EigenMode& mode) {
    BoundaryProfile re = op.apply_Bstar(mode.phi.real(), mode.psi.real());
    BoundaryProfile im = op.apply_Bstar(mode.phi.imag(), mode.psi.imag());
    return {re, im};
}

}  // namespace

ControlBasis build_control_basis(const OseenOperator& op, const SpectralData& spectral,
                                 double rank_tol) {
    if (spectral.n_unstable < 1)
        throw std::invalid_argument("build_control_basis: no unstable modes (N_u = 0)");
    std::vector<BoundaryProfile> candidates;
    for (const auto& mode : spectral.modes) {
        if (mode.lambda.real() <= 0.0) continue;
        if (mode.lambda.imag() < -1e-11) continue;  // one representative per pair
        auto [re, im] = bstar_complex(op, mode);
        candidates.push_back(std::move(re));
        candidates.push_back(std::move(im));
    }
    double max_norm = 0.0;
    for (const auto& c : candidates) max_norm = std::max(max_norm, c.norm());
    if (max_norm <= 0.0)
        throw std::runtime_error(
            "build_control_basis: all control traces vanish; the Hautus test will fail");

    ControlBasis basis;
    for (auto& c : candidates) {
        BoundaryProfile w = c;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& gj : basis.profiles) {
                BoundaryProfile proj = gj;
                proj *= -w.dot(gj);
                w += proj;
            }
        const double n = w.norm();
        if (n < rank_tol * max_norm) continue;
        w *= 1.0 / n;
        basis.profiles.push_back(std::move(w));
    }
    if (basis.profiles.empty())
        throw std::runtime_error(
            "build_control_basis: candidate traces are rank deficient; Hautus will fail");

    const int nc = basis.size();
    basis.gram.resize(nc, nc);
    for (int i = 0; i < nc; ++i)
        for (int j = 0; j < nc; ++j) basis.gram(i, j) = basis.profiles[i].dot(basis.profiles[j]);

    for (const auto& gj : basis.profiles) {
        auto lf = op.dirichlet_lift(gj);
        basis.projected_liftings.push_back(op.leray().project(lf.velocity).interior());
        basis.liftings.push_back(std::move(lf));
    }
    return basis;
}

HautusReport hautus_check(const OseenOperator& op, const SpectralData& spectral,
                          const ControlBasis& basis) {
    HautusReport rep;
    rep.tol = op.config().tol_hautus;
    const double cluster_tol = 1e-7;
    std::vector<int> used(spectral.modes.size(), 0);
    for (size_t k = 0; k < spectral.modes.size(); ++k) {
        const auto& mk = spectral.modes[k];
        if (used[k] || mk.lambda.real() <= 0.0) continue;
        if (mk.lambda.imag() < -1e-11) continue;
        // Gather a basis of the eigenspace (multiplicity cluster).
        std::vector<size_t> group{k};
        used[k] = 1;
        for (size_t l = k + 1; l < spectral.modes.size(); ++l) {
            if (used[l]) continue;
            if (std::abs(spectral.modes[l].lambda - mk.lambda) < cluster_tol) {
                group.push_back(l);
                used[l] = 1;
            }
        }
        const int nc = basis.size();
        rep.eigenvalues.push_back(mk.lambda);
        if (nc == 0) {
            rep.smallest_singular_values.push_back(0.0);
            continue;
        }
        Eigen::MatrixXcd M(nc, static_cast<int>(group.size()));
        for (size_t c = 0; c < group.size(); ++c) {
            auto [re, im] = bstar_complex(op, spectral.modes[group[c]]);
            for (int j = 0; j < nc; ++j)
                M(j, static_cast<int>(c)) =
                    std::complex<double>(basis.profiles[j].dot(re), basis.profiles[j].dot(im));
        }
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
        rep.smallest_singular_values.push_back(svd.singularValues().minCoeff());
    }
    rep.pass = !rep.smallest_singular_values.empty();
    for (double s : rep.smallest_singular_values)
        if (s < rep.tol) rep.pass = false;
    return rep;
}

Eigen::VectorXd ReducedExtendedSystem::reduce(const Eigen::VectorXd& y_interior) const {
    Eigen::VectorXd coords(n_modes);
    for (int i = 0; i < n_modes; ++i)
        coords(i) = grid.cell_area() * dual_fields[i].dot(y_interior);
    return coords;
}

Eigen::VectorXd ReducedExtendedSystem::prolong(const Eigen::VectorXd& coords) const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(grid.n_interior());
    for (int i = 0; i < n_modes; ++i) y += coords(i) * basis_fields[i];
    return y;
}

ReducedExtendedSystem assemble_extended(const OseenOperator& op, const SpectralData& spectral,
                                        const ControlBasis& basis, unsigned seed) {
    const auto& g = op.grid();
    const int n_margin = op.config().n_margin;
    int want = spectral.n_unstable + n_margin;

    // Direct modes span the invariant subspace; adjoint modes provide the
    // dual (reduction) functionals.
    SpectralData direct = op.spectrum(false, want, seed);

    ReducedExtendedSystem sys;
    sys.grid = g;
    sys.gamma = op.config().gamma_eff(op.beta());
    sys.lambda0 = op.lambda0();
    sys.n_controls = basis.size();

    const double area = g.cell_area();
    auto cdot = [&](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
        // <a, b> conjugate-linear in the second slot.
        return area * b.dot(a);
    };

    struct Group {
        std::complex<double> lambda;
        Eigen::VectorXcd phi;   // direct eigenvector
        Eigen::VectorXcd zeta;  // adjoint eigenvector, normalized <phi,zeta>=1
        bool complex_pair;
    };
    std::vector<Group> groups;
    int real_dims = 0;
    for (const auto& dm : direct.modes) {
        if (real_dims >= want) break;
        if (dm.lambda.imag() < -1e-11) continue;
        const bool cpx = std::abs(dm.lambda.imag()) > 1e-11;
        // Match the adjoint mode at conj(lambda).
        const EigenMode* match = nullptr;
        double best = 1e9;
        for (const auto& am : spectral.modes) {
            const double dist = std::abs(am.lambda - std::conj(dm.lambda));
            if (dist < best) {
                best = dist;
                match = &am;
            }
        }
        if (!match || best > 1e-5 * std::max(1.0, std::abs(dm.lambda)))
            throw std::runtime_error("assemble_extended: no adjoint match for eigenvalue");
        Group grp;
        grp.lambda = dm.lambda;
        grp.phi = dm.phi;
        grp.complex_pair = cpx;
        const std::complex<double> s = cdot(grp.phi, match->phi);
        if (std::abs(s) < 1e-8)
            throw std::invalid_argument(
                "assemble_extended: defective invariant subspace (near-orthogonal pairing)");
        grp.zeta = match->phi / std::conj(s);
        groups.push_back(std::move(grp));
        real_dims += cpx ? 2 : 1;
    }
    if (real_dims < spectral.n_unstable)
        throw std::runtime_error("assemble_extended: direct basis misses unstable modes");
    sys.n_modes = real_dims;

    sys.A_r = Eigen::MatrixXd::Zero(real_dims, real_dims);
    sys.B_r = Eigen::MatrixXd::Zero(real_dims, sys.n_controls);
    int row = 0;
    for (const auto& grp : groups) {
        sys.eigenvalues.push_back(grp.lambda);
        const double a = grp.lambda.real(), b = grp.lambda.imag();
        if (grp.complex_pair) {
            sys.A_r(row, row) = a;
            sys.A_r(row, row + 1) = b;
            sys.A_r(row + 1, row) = -b;
            sys.A_r(row + 1, row + 1) = a;
        } else {
            sys.A_r(row, row) = a;
        }
        for (int j = 0; j < sys.n_controls; ++j) {
            // c = <B g_j, zeta> = (lambda0 - lambda) <P D_A g_j, zeta>.
            Eigen::VectorXcd pd(basis.projected_liftings[j].size());
            pd.real() = basis.projected_liftings[j];
            pd.imag().setZero();
            const std::complex<double> c = (sys.lambda0 - grp.lambda) * cdot(pd, grp.zeta);
            if (grp.complex_pair) {
                sys.B_r(row, j) = 2.0 * c.real();
                sys.B_r(row + 1, j) = -2.0 * c.imag();
            } else {
                sys.B_r(row, j) = c.real();
                sys.max_imag_residue = std::max(sys.max_imag_residue, std::abs(c.imag()));
            }
        }
        // Realified basis columns and reduction functionals.
        if (grp.complex_pair) {
            Eigen::VectorXd v1 = grp.phi.real(), v2 = grp.phi.imag();
            sys.basis_fields.push_back(v1);
            sys.basis_fields.push_back(v2);
            sys.dual_fields.push_back(2.0 * grp.zeta.real());
            sys.dual_fields.push_back(2.0 * grp.zeta.imag());
        } else {
            sys.max_imag_residue =
                std::max(sys.max_imag_residue, grp.phi.imag().cwiseAbs().maxCoeff());
            sys.basis_fields.push_back(grp.phi.real());
            sys.dual_fields.push_back(grp.zeta.real());
        }
        row += grp.complex_pair ? 2 : 1;
    }

    const int nr = sys.n_r();
    sys.A_tilde = Eigen::MatrixXd::Zero(nr, nr);
    sys.A_tilde.topLeftCorner(real_dims, real_dims) = sys.A_r;
    sys.A_tilde.topRightCorner(real_dims, sys.n_controls) = sys.B_r;
    sys.A_tilde.bottomRightCorner(sys.n_controls, sys.n_controls) =
        -sys.gamma * Eigen::MatrixXd::Identity(sys.n_controls, sys.n_controls);
    sys.J_tilde = Eigen::MatrixXd::Zero(nr, sys.n_controls);
    sys.J_tilde.bottomRows(sys.n_controls) =
        Eigen::MatrixXd::Identity(sys.n_controls, sys.n_controls);
    return sys;
}

Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q) {
    const Eigen::Index n = A.rows();
    Eigen::MatrixXd H(2 * n, 2 * n);
    H << A, B * B.transpose(), Q, -A.transpose();

    // Matrix sign iteration with determinant scaling.
    Eigen::MatrixXd Z = H;
    const double p = static_cast<double>(Z.rows());
    double relative_norm = 1.0;
    for (int it = 0; it < 200 && relative_norm > 1e-12; ++it) {
        const Eigen::MatrixXd Z_old = Z;
        const double det = std::abs(Z.determinant());
        if (!(det > 0.0) || !std::isfinite(det))
            throw std::runtime_error("solve_care: Hamiltonian near-singular (axis eigenvalue?)");
        const double ck = std::pow(det, -1.0 / p);
        Z *= ck;
        Z = Z - 0.5 * (Z - Z.inverse());
        relative_norm = (Z - Z_old).norm() / std::max(1.0, Z.norm());
    }
    if (!(relative_norm <= 1e-8))
        throw std::runtime_error("solve_care: sign iteration did not converge");

    const Eigen::MatrixXd W11 = Z.topLeftCorner(n, n);
    const Eigen::MatrixXd W12 = Z.topRightCorner(n, n);
    const Eigen::MatrixXd W21 = Z.bottomLeftCorner(n, n);
    const Eigen::MatrixXd W22 = Z.bottomRightCorner(n, n);
    Eigen::MatrixXd lhs(2 * n, n), rhs(2 * n, n);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    lhs << W12, W22 + eye;
    rhs << W11 + eye, W21;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(lhs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd P = svd.solve(rhs);
    return 0.5 * (P + P.transpose());
}

namespace {

double spectral_abscissa(const Eigen::MatrixXd& M) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(M);
    return es.eigenvalues().real().maxCoeff();
}

FeedbackGain evaluate_gain(const ReducedExtendedSystem& sys, const Eigen::MatrixXd& P) {
    FeedbackGain gain;
    gain.P = P;
    gain.K = -sys.J_tilde.transpose() * P;
    gain.Acl = sys.A_tilde + sys.J_tilde * gain.K;
    const Eigen::MatrixXd PA = P * sys.A_tilde;
    const Eigen::MatrixXd res =
        PA + PA.transpose() - P * sys.J_tilde * sys.J_tilde.transpose() * P;
    gain.riccati_residual_rel = res.norm() / std::max(PA.norm(), 1e-300);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(P);
    gain.min_eig_P = se.eigenvalues().minCoeff();
    gain.spectral_abscissa = spectral_abscissa(gain.Acl);
    return gain;
}

}  // namespace

FeedbackGain solve_riccati(const ReducedExtendedSystem& sys, double tol_are) {
    const int nr = sys.n_r();
    const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(nr, nr);
    // Exact state-cost-free equation first. Its stabilizing solution is
    // singular whenever the reduced model carries stable modes, in which
    // case a vanishing state weight restores invertibility.
    FeedbackGain gain = evaluate_gain(sys, solve_care(sys.A_tilde, sys.J_tilde, Z));
    if (gain.min_eig_P > 1e-12 * gain.P.norm() && gain.spectral_abscissa < 0.0 &&
        gain.riccati_residual_rel <= tol_are) {
        gain.route = "bernoulli";
        gain.rho = 0.0;
        return gain;
    }
    for (double rho = 1e-8; rho >= 1e-15; rho *= 0.1) {
        const Eigen::MatrixXd Q = rho * Eigen::MatrixXd::Identity(nr, nr);
        FeedbackGain cand = evaluate_gain(sys, solve_care(sys.A_tilde, sys.J_tilde, Q));
        if (cand.min_eig_P > 0.0 && cand.spectral_abscissa < 0.0 &&
            cand.riccati_residual_rel <= tol_are) {
            cand.route = "bernoulli_rho";
            cand.rho = rho;
            return cand;
        }
    }
    throw std::runtime_error(
        "solve_riccati: no positive-definite stabilizing solution within tolerance "
        "(Hamiltonian conditioning)");
}

Eigen::VectorXd feedback(const FeedbackGain& gain, const Eigen::VectorXd& coords,
                         const Eigen::VectorXd& w_c) {
    const int nr = gain.K.cols();
    if (coords.size() + w_c.size() != nr)
        throw std::invalid_argument("feedback: state dimension mismatch");
    Eigen::VectorXd state(nr);
    state << coords, w_c;
    return gain.K * state;
}

}  // namespace chanstab
