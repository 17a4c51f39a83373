#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdfag/types.hpp"

namespace cdfag {

/// Per-class recognition precision as the diagonal fraction of each
/// confusion row (rows are true classes), and their mean.
struct EvalReport {
  std::vector<double> precision;  // NaN for classes absent from the truth
  double average_precision = 0.0;
  Eigen::MatrixXi confusion;
  std::vector<Index> class_counts;

  std::string method;
  std::uint64_t seed = 0;
  Index source_train = 0;
  Index target_train = 0;
  double wall_seconds = 0.0;
};

/// Throws LengthMismatch; labels outside [0, c) raise BadConfig.
EvalReport evaluate(const Labels& predictions, const Labels& truth, int class_count);

}  // namespace cdfag
