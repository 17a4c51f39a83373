#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace cdfag {

/// Samples are stored one per row.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

using Labels = std::vector<int>;

/// Label value marking a sample whose class is unknown.
inline constexpr int kUnlabeled = -1;

/// One domain's samples with a per-row class id or kUnlabeled.
struct FeatureSet {
  Matrix features;
  Labels labels;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  std::size_t labeled_count() const;
  /// Rows carrying a class label, in original order.
  std::vector<Index> labeled_rows() const;
  FeatureSet subset(const std::vector<Index>& rows) const;
  FeatureSet labeled_only() const { return subset(labeled_rows()); }
};

/// K domains sharing a class vocabulary [0, class_count).
struct DomainBundle {
  std::vector<FeatureSet> domains;
  int class_count = 0;

  Index total_samples() const;
};

/// Throws DimensionMismatch / LengthMismatch / NonFiniteInput on malformed
/// feature sets. Labels must be kUnlabeled or in [0, class_count) when
/// class_count > 0.
void validate(const FeatureSet& set, int class_count = 0);

bool all_finite(const Matrix& m);

/// Largest-magnitude entry of each column made positive (first index wins
/// magnitude ties).
void fix_column_signs(Matrix& columns);
void fix_row_signs(Matrix& rows);

/// Row-wise squared Euclidean distances between the rows of a and b.
Matrix squared_distances(const Matrix& a, const Matrix& b);

}  // namespace cdfag
