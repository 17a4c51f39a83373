#include "cdfag/types.hpp"

#include <cmath>
#include <string>

#include "cdfag/error.hpp"
#include "cdfag/random.hpp"

namespace cdfag {

std::size_t FeatureSet::labeled_count() const {
  std::size_t n = 0;
  for (int l : labels) n += (l != kUnlabeled);
  return n;
}

std::vector<Index> FeatureSet::labeled_rows() const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kUnlabeled) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

FeatureSet FeatureSet::subset(const std::vector<Index>& rows) const {
  FeatureSet out;
  out.features.resize(static_cast<Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Index>(i)) = features.row(rows[i]);
    out.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

Index DomainBundle::total_samples() const {
  Index n = 0;
  for (const auto& d : domains) n += d.size();
  return n;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

void validate(const FeatureSet& set, int class_count) {
  if (static_cast<std::size_t>(set.features.rows()) != set.labels.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "feature rows " + std::to_string(set.features.rows()) +
                    " vs labels " + std::to_string(set.labels.size()));
  }
  if (!set.features.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "feature matrix has NaN/Inf");
  }
  for (int l : set.labels) {
    if (l == kUnlabeled) continue;
    if (l < 0 || (class_count > 0 && l >= class_count)) {
      throw Error(ErrorCode::BadConfig,
                  "label " + std::to_string(l) + " outside class range");
    }
  }
}

namespace {

template <typename Vec>
void fix_sign(Vec v) {
  Index best = 0;
  double best_mag = -1.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > best_mag) {
      best_mag = std::abs(v(i));
      best = i;
    }
  }
  if (v.size() > 0 && v(best) < 0) v = -v;
}

}  // namespace

void fix_column_signs(Matrix& columns) {
  for (Index j = 0; j < columns.cols(); ++j) fix_sign(columns.col(j));
}

void fix_row_signs(Matrix& rows) {
  for (Index i = 0; i < rows.rows(); ++i) fix_sign(rows.row(i));
}

Matrix squared_distances(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) +
                    " columns");
  }
  Matrix d(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.rows(); ++j) {
      d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
    }
  }
  return d;
}

std::uint64_t Rng::index(std::uint64_t n) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  std::uint64_t v;
  do {
    v = engine_();
  } while (v < threshold);
  return v % n;
}

double Rng::normal() {
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace cdfag
