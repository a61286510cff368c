#include "chordrec/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "chordrec/error.hpp"

namespace chordrec {

template <typename Scalar>
SymmetricEigen<Scalar> jacobi_eigen(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& symmetric,
                                    Scalar tolerance, int max_sweeps) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = symmetric.rows();
  if (symmetric.cols() != n) throw ShapeError("jacobi_eigen needs a square matrix");
  Matrix a = (symmetric + symmetric.transpose()) / Scalar(2);
  Matrix v = Matrix::Identity(n, n);
  const Scalar scale = std::max(a.norm(), std::numeric_limits<Scalar>::min());

  auto off_norm = [&] {
    Scalar s = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) s += 2 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < max_sweeps && off_norm() > tolerance * scale; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == Scalar(0)) continue;
        // Rotation angle that annihilates a(p, q).
        const Scalar theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                         (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
  SymmetricEigen<Scalar> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values[k] = a(src, src);
    out.vectors.col(k) = v.col(src);
  }
  return out;
}

template SymmetricEigen<double> jacobi_eigen(const Eigen::MatrixXd&, double, int);
template SymmetricEigen<float> jacobi_eigen(const Eigen::MatrixXf&, float, int);

PcaResult pca(const Eigen::MatrixXd& data, int components) {
  if (components < 1 || components > data.cols()) {
    throw ParameterError("PCA component count out of range");
  }
  if (data.rows() < 1) throw ShapeError("PCA needs at least one observation");
  PcaResult out;
  out.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - out.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(data.rows());
  const auto eig = jacobi_eigen<double>(cov);
  out.variances = eig.values;
  out.components = eig.vectors.leftCols(components);
  // Sign convention: largest-magnitude loading of each component is positive.
  for (int k = 0; k < components; ++k) {
    Eigen::Index i;
    out.components.col(k).cwiseAbs().maxCoeff(&i);
    if (out.components(i, k) < 0) out.components.col(k) *= -1.0;
  }
  out.projection = centered * out.components;
  return out;
}

}  // namespace chordrec
