#include "cdfag/graph_spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "cdfag/error.hpp"

namespace cdfag::spectral {

std::string to_string(KernelKind kind) {
  return kind == KernelKind::rbf ? "rbf" : "linear";
}

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "rbf") return KernelKind::rbf;
  if (name == "linear") return KernelKind::linear;
  throw Error(ErrorCode::BadConfig, "unknown kernel '" + name + "'");
}

double median_bandwidth(const Matrix& samples) {
  const Index n = samples.rows();
  if (n < 2) throw Error(ErrorCode::InsufficientData, "median bandwidth needs >= 2 samples");
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      dist.push_back((samples.row(i) - samples.row(j)).norm());
    }
  }
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double median = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  if (!(median > 0.0)) throw Error(ErrorCode::DegenerateData, "all samples coincide");
  return 0.5 * median;
}

Matrix gram(const Matrix& a, const Matrix& b, const KernelSpec& spec) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "kernel inputs have " +
                                                  std::to_string(a.cols()) + " and " +
                                                  std::to_string(b.cols()) + " columns");
  }
  if (spec.kind == KernelKind::linear) return a * b.transpose();
  if (!(spec.bandwidth > 0.0)) throw Error(ErrorCode::BadConfig, "rbf bandwidth must be > 0");
  const double scale = -1.0 / (2.0 * spec.bandwidth * spec.bandwidth);
  return (squared_distances(a, b) * scale).array().exp().matrix();
}

Matrix knn_topology_weights(const Matrix& samples, Index k, KnnSymmetrization sym) {
  const Index n = samples.rows();
  if (k < 1 || k >= n) {
    throw Error(ErrorCode::BadConfig, "k=" + std::to_string(k) + " needs 1 <= k < N=" +
                                          std::to_string(n));
  }
  const Matrix d2 = squared_distances(samples, samples);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> nb =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  std::vector<std::pair<double, Index>> row(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (Index j = 0; j < n; ++j) {
      if (j != i) row[r++] = {d2(i, j), j};
    }
    std::partial_sort(row.begin(), row.begin() + k, row.end());
    for (Index t = 0; t < k; ++t) nb(i, row[static_cast<std::size_t>(t)].second) = true;
  }
  Matrix w = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const bool edge = sym == KnnSymmetrization::union_ ? (nb(i, j) || nb(j, i))
                                                         : (nb(i, j) && nb(j, i));
      if (edge) w(i, j) = std::exp(-d2(i, j));
    }
  }
  return w;
}

Matrix label_weights(const Labels& labels, LabelRelation relation) {
  const auto n = static_cast<Index>(labels.size());
  Matrix w = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const int li = labels[static_cast<std::size_t>(i)];
    if (li == kUnlabeled) continue;
    for (Index j = 0; j < n; ++j) {
      const int lj = labels[static_cast<std::size_t>(j)];
      if (i == j || lj == kUnlabeled) continue;
      const bool same = li == lj;
      if (same == (relation == LabelRelation::same_class)) w(i, j) = 1.0;
    }
  }
  return w;
}

Matrix laplacian(const Matrix& weights) {
  if (weights.rows() != weights.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "weight matrix is not square");
  }
  const double scale = std::max(1.0, weights.cwiseAbs().maxCoeff());
  if ((weights - weights.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::AsymmetricInput, "weight matrix is not symmetric");
  }
  Matrix l = -weights;
  l.diagonal() = weights.rowwise().sum() - weights.diagonal();
  return l;
}

GevdResult solve_gevd(const Matrix& a, const Matrix& b, Index n, double ridge) {
  const Index size = a.rows();
  if (a.cols() != size || b.rows() != size || b.cols() != size) {
    throw Error(ErrorCode::DimensionMismatch, "pencil matrices must share one square size");
  }
  if (n < 1 || n > size) {
    throw Error(ErrorCode::BadConfig, "requested " + std::to_string(n) +
                                          " eigenpairs of a size-" + std::to_string(size) +
                                          " pencil");
  }
  if (ridge < 0.0) throw Error(ErrorCode::BadConfig, "ridge must be >= 0");
  if (!a.allFinite() || !b.allFinite()) throw Error(ErrorCode::NonFiniteInput, "pencil");

  const Matrix sym_a = 0.5 * (a + a.transpose());
  Matrix rhs = 0.5 * (b + b.transpose());
  rhs.diagonal().array() += ridge;

  Eigen::LLT<Matrix> chol(rhs);
  if (chol.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularPencil, "B + ridge*I is not positive definite");
  }
  const Matrix lower = chol.matrixL();
  const double max_pivot = lower.diagonal().cwiseAbs2().maxCoeff();
  if (!(lower.diagonal().cwiseAbs2().minCoeff() > 1e-15 * max_pivot)) {
    throw Error(ErrorCode::SingularPencil, "B + ridge*I is numerically singular");
  }

  // Reduce to the standard problem C y = lambda y with C = L^-1 A L^-T.
  Matrix c = chol.matrixL().solve(sym_a);
  c = chol.matrixL().solve(c.transpose()).transpose();
  c = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::NonConvergence, "symmetric eigensolver failed");
  }

  GevdResult out;
  out.ridge = ridge;
  out.eigenvalues = eig.eigenvalues().head(n);
  out.eigenvectors = chol.matrixU().solve(eig.eigenvectors().leftCols(n));
  fix_column_signs(out.eigenvectors);
  return out;
}

double gevd_residual(const Matrix& a, const Matrix& b, double ridge, double lambda,
                     const Vector& v) {
  return (a * v - lambda * (b * v + ridge * v)).norm();
}

}  // namespace cdfag::spectral
