#include "cdfag/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cdfag/error.hpp"
#include "cdfag/random.hpp"

namespace cdfag::encoding {

namespace {

bool row_less(const Matrix& m, Index a, Index b) {
  for (Index j = 0; j < m.cols(); ++j) {
    if (m(a, j) != m(b, j)) return m(a, j) < m(b, j);
  }
  return false;
}

std::vector<Index> sorted_row_order(const Matrix& m) {
  std::vector<Index> order(static_cast<std::size_t>(m.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return row_less(m, a, b); });
  return order;
}

Index count_distinct_rows(const Matrix& m) {
  if (m.rows() == 0) return 0;
  const auto order = sorted_row_order(m);
  Index distinct = 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (row_less(m, order[i - 1], order[i])) ++distinct;
  }
  return distinct;
}

// Nearest center for each point; ties go to the lower center index.
double assign(const Matrix& points, const Matrix& centers,
              std::vector<Index>& assignment, Vector& best_dist) {
  double inertia = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Index arg = 0;
    for (Index c = 0; c < centers.rows(); ++c) {
      const double d = (points.row(i) - centers.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    assignment[static_cast<std::size_t>(i)] = arg;
    best_dist(i) = best;
    inertia += best;
  }
  return inertia;
}

Matrix plus_plus_seed(const Matrix& points, Index k, Rng& rng) {
  const Index n = points.rows();
  Matrix centers(k, points.cols());
  const auto first = static_cast<Index>(rng.index(static_cast<std::uint64_t>(n)));
  centers.row(0) = points.row(first);
  Vector dist(n);
  for (Index i = 0; i < n; ++i) {
    dist(i) = (points.row(i) - centers.row(0)).squaredNorm();
  }
  for (Index c = 1; c < k; ++c) {
    const double total = dist.sum();
    Index pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      pick = -1;
      for (Index i = 0; i < n; ++i) {
        if (dist(i) <= 0.0) continue;
        r -= dist(i);
        pick = i;
        if (r < 0.0) break;
      }
    }
    centers.row(c) = points.row(pick);
    for (Index i = 0; i < n; ++i) {
      dist(i) = std::min(dist(i), (points.row(i) - centers.row(c)).squaredNorm());
    }
  }
  return centers;
}

}  // namespace

Matrix kmeans(const Matrix& points, Index k, std::uint64_t seed,
              const KmeansOptions& options) {
  if (k < 1) throw Error(ErrorCode::BadConfig, "codebook size must be >= 1");
  if (!points.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "descriptor values must be finite");
  }
  const Index distinct = count_distinct_rows(points);
  if (distinct < k) {
    throw Error(ErrorCode::InsufficientData,
                std::to_string(distinct) + " distinct descriptors for " +
                    std::to_string(k) + " centers");
  }

  Rng rng(seed);
  Matrix centers = plus_plus_seed(points, k, rng);
  std::vector<Index> assignment(static_cast<std::size_t>(points.rows()));
  Vector best_dist(points.rows());
  double previous = assign(points, centers, assignment, best_dist);

  for (int iter = 0; iter < options.max_iterations && previous > 0.0; ++iter) {
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < points.rows(); ++i) {
      const Index c = assignment[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // Empty cluster: restart it on the worst-fit point.
        Index worst;
        best_dist.maxCoeff(&worst);
        centers.row(c) = points.row(worst);
        best_dist(worst) = 0.0;
      }
    }
    const double inertia = assign(points, centers, assignment, best_dist);
    const double change = std::abs(previous - inertia);
    previous = inertia;
    if (change <= options.relative_tolerance * std::max(inertia, 1e-300)) break;
  }

  // Canonical order so equal inputs persist identically.
  const auto order = sorted_row_order(centers);
  Matrix sorted(k, centers.cols());
  for (Index c = 0; c < k; ++c) sorted.row(c) = centers.row(order[static_cast<std::size_t>(c)]);
  return sorted;
}

Codebook build_codebook(const std::vector<DescriptorSet>& videos,
                        Index codebook_size, Index per_video_sample,
                        std::uint64_t seed, const KmeansOptions& options) {
  if (videos.empty()) throw Error(ErrorCode::EmptyInput, "no descriptor sets");
  if (per_video_sample < 1) {
    throw Error(ErrorCode::BadConfig, "per-video sample must be >= 1");
  }
  const Index dim = videos.front().descriptors.cols();
  Rng rng(seed);
  std::vector<const DescriptorSet*> ordered;
  for (const auto& v : videos) {
    if (v.descriptors.cols() != dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  "video " + v.video_id + " has a different descriptor width");
    }
    if (!v.descriptors.allFinite()) {
      throw Error(ErrorCode::NonFiniteInput, "video " + v.video_id);
    }
    ordered.push_back(&v);
  }

  Index total = 0;
  for (const auto* v : ordered) {
    total += std::min(v->descriptors.rows(), per_video_sample);
  }
  Matrix sample(total, dim);
  Index row = 0;
  for (const auto* v : ordered) {
    const Index m = v->descriptors.rows();
    std::vector<Index> idx(static_cast<std::size_t>(m));
    std::iota(idx.begin(), idx.end(), Index{0});
    const Index take = std::min(m, per_video_sample);
    if (take < m) {
      // Partial Fisher-Yates: first `take` slots hold the sample.
      for (Index i = 0; i < take; ++i) {
        const auto j = i + static_cast<Index>(rng.index(static_cast<std::uint64_t>(m - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      }
      std::sort(idx.begin(), idx.begin() + take);
    }
    for (Index i = 0; i < take; ++i) {
      sample.row(row++) = v->descriptors.row(idx[static_cast<std::size_t>(i)]);
    }
  }
  return Codebook{kmeans(sample, codebook_size, rng.split(), options)};
}

std::vector<Index> nearest_bases(const Codebook& codebook,
                                 const Eigen::Ref<const Vector>& x, Index k) {
  const Index b = codebook.size();
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(b));
  for (Index j = 0; j < b; ++j) {
    dist[static_cast<std::size_t>(j)] = {
        (codebook.bases.row(j).transpose() - x).squaredNorm(), j};
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  std::vector<Index> out(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = dist[static_cast<std::size_t>(i)].second;
  return out;
}

Matrix llc_encode(const DescriptorSet& descriptors, const Codebook& codebook,
                  Index num_bases, double reg) {
  const Index b = codebook.size();
  if (num_bases < 1 || num_bases > b) {
    throw Error(ErrorCode::BadConfig, "num_bases " + std::to_string(num_bases) +
                                          " not in [1, " + std::to_string(b) + "]");
  }
  if (!(reg > 0.0)) throw Error(ErrorCode::BadConfig, "LLC regularizer must be > 0");
  if (descriptors.descriptors.cols() != codebook.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "descriptor width " +
                                                  std::to_string(descriptors.descriptors.cols()) +
                                                  " vs codebook " + std::to_string(codebook.dim()));
  }
  if (!descriptors.descriptors.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "video " + descriptors.video_id);
  }

  const Index m = descriptors.descriptors.rows();
  Matrix codes = Matrix::Zero(m, b);
  Matrix z(num_bases, codebook.dim());
  for (Index i = 0; i < m; ++i) {
    const Vector x = descriptors.descriptors.row(i).transpose();
    const auto idx = nearest_bases(codebook, x, num_bases);
    for (Index r = 0; r < num_bases; ++r) {
      z.row(r) = codebook.bases.row(idx[static_cast<std::size_t>(r)]) - x.transpose();
    }
    Matrix gram = z * z.transpose();
    const double trace = gram.trace();
    Vector w;
    if (trace > 0.0) {
      gram.diagonal().array() += reg * trace;
      w = gram.ldlt().solve(Vector::Ones(num_bases));
    } else {
      // x coincides with every selected basis.
      w = Vector::Ones(num_bases);
    }
    w /= w.sum();
    for (Index r = 0; r < num_bases; ++r) codes(i, idx[static_cast<std::size_t>(r)]) = w(r);
  }
  return codes;
}

Pooling parse_pooling(const std::string& name) {
  if (name == "max") return Pooling::max;
  if (name == "sum") return Pooling::sum;
  if (name == "mean") return Pooling::mean;
  throw Error(ErrorCode::BadConfig, "unknown pooling '" + name + "'");
}

Vector pool_codes(const Matrix& codes, Pooling pooling) {
  if (codes.rows() == 0) throw Error(ErrorCode::EmptyInput, "no codes to pool");
  switch (pooling) {
    case Pooling::max: return codes.colwise().maxCoeff().transpose();
    case Pooling::sum: return codes.colwise().sum().transpose();
    case Pooling::mean: return codes.colwise().mean().transpose();
  }
  return {};
}

namespace {

// Smallest count whose cumulative share strictly exceeds `fraction`. The
// comparison carries a relative epsilon so a share equal to the fraction up
// to rounding does not count as exceeding it.
Index retained_count(const Vector& eigenvalues, double total, double fraction) {
  double cumulative = 0.0;
  for (Index p = 0; p < eigenvalues.size(); ++p) {
    cumulative += eigenvalues(p);
    if (cumulative - fraction * total > 1e-9 * total) return p + 1;
  }
  return eigenvalues.size();
}

}  // namespace

PcaModel pca_fit(const Matrix& features, double retained_fraction) {
  if (features.rows() < 2) throw Error(ErrorCode::InsufficientData, "PCA needs >= 2 samples");
  if (!(retained_fraction > 0.0 && retained_fraction <= 1.0)) {
    throw Error(ErrorCode::BadConfig, "retained fraction must be in (0, 1]");
  }
  if (!features.allFinite()) throw Error(ErrorCode::NonFiniteInput, "PCA input");

  const Index n = features.rows();
  const Index d = features.cols();
  PcaModel model;
  model.retained_fraction = retained_fraction;
  model.mean = features.colwise().mean().transpose();
  const Matrix centered = features.rowwise() - model.mean.transpose();

  Vector values;   // descending
  Matrix vectors;  // columns, matching `values`
  if (n >= d) {
    const Matrix cov = centered.transpose() * centered / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    values = eig.eigenvalues().reverse();
    vectors = eig.eigenvectors().rowwise().reverse();
  } else {
    // Fewer samples than dimensions: diagonalize the n x n Gram matrix.
    const Matrix gram = centered * centered.transpose() / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    values = eig.eigenvalues().reverse();
    const Matrix u = eig.eigenvectors().rowwise().reverse();
    vectors = Matrix::Zero(d, n);
    for (Index j = 0; j < n; ++j) {
      if (values(j) > 0.0) {
        vectors.col(j) = centered.transpose() * u.col(j) /
                         std::sqrt(static_cast<double>(n) * values(j));
      }
    }
  }
  values = values.cwiseMax(0.0);
  const double total = values.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::DegenerateData, "covariance is all zero");

  Index p = retained_count(values, total, retained_fraction);
  // Components beyond the numerical rank carry no variance.
  while (p > 1 && values(p - 1) <= 0.0) --p;
  model.total_variance = total;
  model.eigenvalues = values.head(p);
  model.components = vectors.leftCols(p).transpose();
  fix_row_signs(model.components);
  return model;
}

Matrix pca_project(const PcaModel& model, const Matrix& features) {
  if (features.cols() != model.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "PCA expects " + std::to_string(model.input_dim()) +
                    " columns, got " + std::to_string(features.cols()));
  }
  return (features.rowwise() - model.mean.transpose()) * model.components.transpose();
}

Matrix pca_reconstruct(const PcaModel& model, const Matrix& projected) {
  if (projected.cols() != model.output_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "projected width mismatch");
  }
  return (projected * model.components).rowwise() + model.mean.transpose();
}

}  // namespace cdfag::encoding
