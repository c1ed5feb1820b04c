#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "chanstab/grid.hpp"

namespace chanstab {

/// Centered face-difference divergence, exact for fields linear in each
/// coordinate. Uses the stored boundary faces.
ScalarGridField divergence(const StaggeredVelocityField& vel);

/// V0 inner product: sum over faces of a.b * hx*hy, component-wise, with
/// trapezoidal (half) weights on the boundary-normal faces.
double inner_product_v0(const StaggeredVelocityField& a, const StaggeredVelocityField& b);
double norm_v0(const StaggeredVelocityField& a);

/// Squared discrete H1_0-type seminorm: squared centered/one-sided
/// differences of both components, walls entering through the stored traces.
/// For zero-trace fields this equals the Dirichlet form of the symmetric
/// ghost-reflection Laplacian.
double norm_v1_sq(const StaggeredVelocityField& a);

/// Squared second-difference seminorm (H2 surrogate for diagnostics).
double norm_h2_sq(const StaggeredVelocityField& a);

/// Interior-dof variants (zero-trace subspace).
double dot_v0(const GridGeometry& g, const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double norm_v1_sq_interior(const GridGeometry& g, const Eigen::VectorXd& w);

/// Cell-centered five-point Laplacian with homogeneous Neumann boundary,
/// solved by a direct factorization with the constant mode pinned.
class NeumannPoisson {
  public:
    explicit NeumannPoisson(const GridGeometry& g);

    /// Solves (div grad) phi = rhs. The right-hand side must be compatible
    /// (mean-free); its mean is removed before the solve. Returns phi with
    /// phi(dof 0) = 0. Throws std::runtime_error if the factorization failed.
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs_cells) const;

    const GridGeometry& grid() const { return g_; }

  private:
    GridGeometry g_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

/// Discrete Leray projector: subtracts the gradient part so that the result
/// is divergence-free with zero normal trace. Orthogonal in the V0 inner
/// product on the zero-normal-trace subspace.
class LerayProjector {
  public:
    explicit LerayProjector(const GridGeometry& g);

    /// Projection of an interior dof vector (zero boundary assumed).
    Eigen::VectorXd project_interior(const Eigen::VectorXd& w) const;

    /// Projection of a full field: normal boundary faces of the output are
    /// zero, tangential traces pass through.
    StaggeredVelocityField project(const StaggeredVelocityField& w) const;

    /// Potential phi with  w - P w = grad phi  (cell-centered, dof 0 pinned).
    Eigen::VectorXd potential(const StaggeredVelocityField& w) const;

    /// Max-norm of the divergence of the projection of w (diagnostic).
    double divergence_after(const StaggeredVelocityField& w) const;

    const NeumannPoisson& poisson() const { return poisson_; }

    /// Divergence of an interior dof vector, as a flat cell vector.
    Eigen::VectorXd div_interior(const Eigen::VectorXd& w) const;

  private:
    GridGeometry g_;
    NeumannPoisson poisson_;
    Eigen::SparseMatrix<double> D_;  // cells x interior dofs
};

/// CSV snapshot: header "x,y,value", one row per sample position.
void write_scalar_csv(const ScalarGridField& s, const std::string& path);
void write_velocity_csv(const StaggeredVelocityField& f, const std::string& path);

}  // namespace chanstab
