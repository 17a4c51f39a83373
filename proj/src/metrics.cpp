#include "cdfag/metrics.hpp"

#include <cmath>
#include <limits>

#include "cdfag/error.hpp"

namespace cdfag {

EvalReport evaluate(const Labels& predictions, const Labels& truth, int class_count) {
  if (predictions.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(predictions.size()) +
                                               " predictions for " +
                                               std::to_string(truth.size()) + " labels");
  }
  if (class_count < 1) throw Error(ErrorCode::BadConfig, "class count must be >= 1");
  EvalReport r;
  r.confusion = Eigen::MatrixXi::Zero(class_count, class_count);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predictions[i];
    if (t < 0 || t >= class_count || p < 0 || p >= class_count) {
      throw Error(ErrorCode::BadConfig, "label outside [0, " + std::to_string(class_count) + ")");
    }
    ++r.confusion(t, p);
  }
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < class_count; ++c) {
    const int row = r.confusion.row(c).sum();
    r.class_counts.push_back(row);
    if (row == 0) {
      r.precision.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double p = static_cast<double>(r.confusion(c, c)) / row;
    r.precision.push_back(p);
    sum += p;
    ++present;
  }
  r.average_precision = present > 0 ? sum / present : 0.0;
  return r;
}

}  // namespace cdfag
