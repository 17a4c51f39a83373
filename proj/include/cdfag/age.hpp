#pragma once

// Aligned-to-generalized encoders: a pair of single-hidden-layer sigmoid
// networks regressing aligned instances onto their class centroids.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cdfag/types.hpp"

namespace cdfag::age {

/// Per-dimension affine map of pooled training features onto [lo, hi].
/// Constant dimensions map to the interval midpoint.
struct RangeScaler {
  Vector min;
  Vector max;
  double lo = 0.1;
  double hi = 0.9;

  static RangeScaler fit(const Matrix& pooled, double lo = 0.1, double hi = 0.9);
  /// Maps [0, 1] onto itself per dimension.
  static RangeScaler identity(Index dim);

  Index dim() const { return min.size(); }
  Matrix transform(const Matrix& features) const;
  Matrix inverse(const Matrix& scaled) const;
};

struct AgeModel {
  Matrix w1;  // H x L
  Vector b1;  // H
  Matrix w2;  // L x H
  Vector b2;  // L

  Index input_dim() const { return w1.cols(); }
  Index hidden_dim() const { return w1.rows(); }
};

struct ClassTargets {
  Matrix targets;  // c x L, row per class
  std::vector<Index> source_counts;
  std::vector<Index> target_counts;

  int class_count() const { return static_cast<int>(targets.rows()); }
};

/// Pooled per-class mean of both domains' scaled labeled instances.
/// Throws MissingClass when a class in [0, class_count) has no instance.
ClassTargets class_targets(const FeatureSet& source_aligned, const FeatureSet& target_aligned,
                           const RangeScaler& scaler, int class_count);

enum class InitScheme {
  unit_uniform,    // every weight and bias ~ U[0, 1]
  scaled_uniform,  // weights ~ U[-r, r], r = sqrt(6 / (fan_in + fan_out)); zero biases
};

InitScheme parse_init_scheme(const std::string& name);
std::string to_string(InitScheme scheme);

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  int iterations = 1000;
  std::uint64_t seed = 0;
  Index hidden_dim = 0;  // 0: equal to the input width
  InitScheme init = InitScheme::unit_uniform;
  Index batch_size = 0;  // 0: full batch
};

void validate(const TrainConfig& config);

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Vector age_forward(const AgeModel& model, const Vector& x);
/// Row-wise forward pass.
Matrix age_generalize(const AgeModel& model, const Matrix& aligned);

AgeModel initialize(Index input_dim, Index hidden_dim, InitScheme scheme, std::uint64_t seed);

struct Gradients {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
};

/// J = 1/(2N) sum_i |T_i - h(x_i)|^2 over the rows of `inputs` / `targets`.
double loss(const AgeModel& model, const Matrix& inputs, const Matrix& targets);
Gradients loss_gradient(const AgeModel& model, const Matrix& inputs, const Matrix& targets,
                        double* loss_out = nullptr);

/// Heavy-ball momentum step: delta = lr * grad + momentum * delta;
/// param -= delta.
template <typename Param>
void momentum_step(Param& param, Param& velocity, const Param& grad, double lr,
                   double momentum) {
  velocity = lr * grad + momentum * velocity;
  param -= velocity;
}

struct TrainResult {
  AgeModel model;
  std::vector<double> loss_curve;  // J before each update
  double final_loss = 0.0;
  Matrix final_outputs;            // forward pass of the training rows after training
};

/// Trains one encoder on `inputs` paired row-wise with `targets`.
TrainResult train_encoder(const Matrix& inputs, const Matrix& targets, const TrainConfig& config);

struct EncoderPair {
  TrainResult source;
  TrainResult target;
};

/// Trains the source and target encoders concurrently on each domain's
/// labeled (already scaled) rows, each paired with its class target.
EncoderPair age_train(const FeatureSet& source_scaled, const FeatureSet& target_scaled,
                      const ClassTargets& targets, const TrainConfig& config);

/// Mean over classes of the average squared distance of members to their
/// class mean.
double within_class_variance(const Matrix& features, const Labels& labels);

}  // namespace cdfag::age
