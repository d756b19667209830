#include "sloc/linalg.hpp"

#include <Eigen/Eigenvalues>

#include "sloc/errors.hpp"

namespace sloc {

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve_sym(const Eigen::MatrixXd& S)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success)
        throw NumericalError("symmetric eigendecomposition failed");
    return es;
}

} // namespace

double opnorm_sym(const Eigen::MatrixXd& S)
{
    return solve_sym(S).eigenvalues().maxCoeff();
}

double min_eigenvalue_sym(const Eigen::MatrixXd& S)
{
    return solve_sym(S).eigenvalues().minCoeff();
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& S)
{
    return 0.5 * (S + S.transpose());
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& S)
{
    const auto es = solve_sym(S);
    Eigen::VectorXd lam = es.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        lam[i] = lam[i] > 0.0 ? std::sqrt(lam[i]) : 0.0;
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd inv_sqrt_psd(const Eigen::MatrixXd& S, double floor)
{
    const auto es = solve_sym(S);
    Eigen::VectorXd lam = es.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        lam[i] = lam[i] >= floor ? 1.0 / std::sqrt(lam[i]) : 0.0;
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd pinv_psd(const Eigen::MatrixXd& S, double floor)
{
    const auto es = solve_sym(S);
    Eigen::VectorXd lam = es.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        lam[i] = lam[i] >= floor ? 1.0 / lam[i] : 0.0;
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace sloc
