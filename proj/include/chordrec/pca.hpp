#pragma once

#include <Eigen/Core>

namespace chordrec {

template <typename Scalar>
struct SymmetricEigen {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;               // descending
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;  // columns
};

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Sweeps until the off-diagonal Frobenius norm falls below
// tolerance * ||A||_F or max_sweeps is reached.
template <typename Scalar>
SymmetricEigen<Scalar> jacobi_eigen(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& symmetric,
                                    Scalar tolerance = Scalar(1e-14), int max_sweeps = 100);

struct PcaResult {
  Eigen::MatrixXd projection;  // rows x components
  Eigen::MatrixXd components;  // dims x components
  Eigen::VectorXd variances;   // all eigenvalues of the covariance, descending
  Eigen::VectorXd mean;
};

// Rows are observations. Covariance uses the 1/n normalization.
PcaResult pca(const Eigen::MatrixXd& data, int components);

}  // namespace chordrec
