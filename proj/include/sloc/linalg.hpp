#ifndef SLOC_LINALG_HPP
#define SLOC_LINALG_HPP

#include <Eigen/Core>

namespace sloc {

// Symmetric-matrix helpers built on Eigen's self-adjoint eigensolver.
// Matrices here are small (dimension <= 64), so dense eigendecomposition
// per call is the simplest correct tool.

// Largest eigenvalue of a symmetric matrix.
double opnorm_sym(const Eigen::MatrixXd& S);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue_sym(const Eigen::MatrixXd& S);

// S^{1/2} for symmetric positive semidefinite S; eigenvalues below zero
// (roundoff) are clamped to zero before the root.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& S);

// S^{-1/2} restricted to the eigenspaces with eigenvalue >= floor.
// Directions below the floor are treated as collapsed and map to zero.
Eigen::MatrixXd inv_sqrt_psd(const Eigen::MatrixXd& S, double floor);

// Pseudo-inverse on the same thresholded eigenspaces.
Eigen::MatrixXd pinv_psd(const Eigen::MatrixXd& S, double floor);

// Symmetrize (S + S^T)/2; the moment recursions accumulate tiny
// asymmetries that the eigensolvers should not see.
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& S);

} // namespace sloc

#endif
