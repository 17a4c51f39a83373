#include "cdfag/age.hpp"

#include <cmath>
#include <future>
#include <numeric>
#include <string>

#include "cdfag/error.hpp"
#include "cdfag/random.hpp"

namespace cdfag::age {

RangeScaler RangeScaler::fit(const Matrix& pooled, double lo, double hi) {
  if (pooled.rows() == 0) throw Error(ErrorCode::EmptyInput, "scaler needs samples");
  if (!pooled.allFinite()) throw Error(ErrorCode::NonFiniteInput, "scaler input");
  RangeScaler s;
  s.min = pooled.colwise().minCoeff().transpose();
  s.max = pooled.colwise().maxCoeff().transpose();
  s.lo = lo;
  s.hi = hi;
  return s;
}

RangeScaler RangeScaler::identity(Index dim) {
  RangeScaler s;
  s.min = Vector::Zero(dim);
  s.max = Vector::Ones(dim);
  s.lo = 0.0;
  s.hi = 1.0;
  return s;
}

Matrix RangeScaler::transform(const Matrix& features) const {
  if (features.cols() != dim()) {
    throw Error(ErrorCode::DimensionMismatch, "scaler expects " + std::to_string(dim()) +
                                                  " columns, got " +
                                                  std::to_string(features.cols()));
  }
  Matrix out(features.rows(), features.cols());
  const double mid = 0.5 * (lo + hi);
  for (Index j = 0; j < dim(); ++j) {
    const double span = max(j) - min(j);
    if (span > 0.0) {
      out.col(j) = ((features.col(j).array() - min(j)) * ((hi - lo) / span) + lo).matrix();
    } else {
      out.col(j).setConstant(mid);
    }
  }
  return out;
}

Matrix RangeScaler::inverse(const Matrix& scaled) const {
  if (scaled.cols() != dim()) throw Error(ErrorCode::DimensionMismatch, "scaler width");
  Matrix out(scaled.rows(), scaled.cols());
  for (Index j = 0; j < dim(); ++j) {
    const double span = max(j) - min(j);
    if (span > 0.0) {
      out.col(j) = ((scaled.col(j).array() - lo) * (span / (hi - lo)) + min(j)).matrix();
    } else {
      out.col(j).setConstant(min(j));
    }
  }
  return out;
}

ClassTargets class_targets(const FeatureSet& source_aligned, const FeatureSet& target_aligned,
                           const RangeScaler& scaler, int class_count) {
  if (class_count < 1) throw Error(ErrorCode::BadConfig, "class count must be >= 1");
  validate(source_aligned, class_count);
  validate(target_aligned, class_count);
  const Index dim = scaler.dim();
  ClassTargets out;
  out.targets = Matrix::Zero(class_count, dim);
  out.source_counts.assign(static_cast<std::size_t>(class_count), 0);
  out.target_counts.assign(static_cast<std::size_t>(class_count), 0);

  auto accumulate = [&](const FeatureSet& set, std::vector<Index>& counts) {
    if (set.size() == 0) return;
    const Matrix scaled = scaler.transform(set.features);
    for (Index i = 0; i < set.size(); ++i) {
      const int c = set.labels[static_cast<std::size_t>(i)];
      if (c == kUnlabeled) continue;
      out.targets.row(c) += scaled.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
  };
  accumulate(source_aligned, out.source_counts);
  accumulate(target_aligned, out.target_counts);

  for (int c = 0; c < class_count; ++c) {
    const auto n = out.source_counts[static_cast<std::size_t>(c)] +
                   out.target_counts[static_cast<std::size_t>(c)];
    if (n == 0) throw Error(ErrorCode::MissingClass, "class " + std::to_string(c));
    out.targets.row(c) /= static_cast<double>(n);
  }
  return out;
}

InitScheme parse_init_scheme(const std::string& name) {
  if (name == "unit_uniform") return InitScheme::unit_uniform;
  if (name == "scaled_uniform") return InitScheme::scaled_uniform;
  throw Error(ErrorCode::BadConfig, "unknown init scheme '" + name + "'");
}

std::string to_string(InitScheme scheme) {
  return scheme == InitScheme::unit_uniform ? "unit_uniform" : "scaled_uniform";
}

void validate(const TrainConfig& config) {
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw Error(ErrorCode::BadConfig, "learning rate must be finite and > 0");
  }
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    throw Error(ErrorCode::BadConfig, "momentum must lie in [0, 1)");
  }
  if (config.iterations < 1) throw Error(ErrorCode::BadConfig, "iterations must be >= 1");
  if (config.hidden_dim < 0 || config.batch_size < 0) {
    throw Error(ErrorCode::BadConfig, "negative layer or batch size");
  }
}

namespace {

Matrix sigmoid(const Matrix& z) {
  return (1.0 + (-z.array()).exp()).inverse().matrix();
}

struct Activations {
  Matrix hidden;
  Matrix output;
};

Activations forward(const AgeModel& m, const Matrix& inputs) {
  Activations a;
  a.hidden = sigmoid((inputs * m.w1.transpose()).rowwise() + m.b1.transpose());
  a.output = sigmoid((a.hidden * m.w2.transpose()).rowwise() + m.b2.transpose());
  return a;
}

void check_shapes(const AgeModel& model, const Matrix& inputs) {
  if (inputs.cols() != model.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "encoder expects " +
                                                  std::to_string(model.input_dim()) +
                                                  " inputs, got " + std::to_string(inputs.cols()));
  }
}

}  // namespace

Vector age_forward(const AgeModel& model, const Vector& x) {
  if (x.size() != model.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "encoder input length");
  }
  return forward(model, x.transpose()).output.transpose();
}

Matrix age_generalize(const AgeModel& model, const Matrix& aligned) {
  check_shapes(model, aligned);
  return forward(model, aligned).output;
}

AgeModel initialize(Index input_dim, Index hidden_dim, InitScheme scheme, std::uint64_t seed) {
  Rng rng(seed);
  AgeModel m;
  m.w1.resize(hidden_dim, input_dim);
  m.b1.resize(hidden_dim);
  m.w2.resize(input_dim, hidden_dim);
  m.b2.resize(input_dim);
  auto fill = [&](auto& t, double lo, double hi) {
    for (Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(lo, hi);
  };
  if (scheme == InitScheme::unit_uniform) {
    fill(m.w1, 0.0, 1.0);
    fill(m.b1, 0.0, 1.0);
    fill(m.w2, 0.0, 1.0);
    fill(m.b2, 0.0, 1.0);
  } else {
    const double r = std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim));
    fill(m.w1, -r, r);
    fill(m.w2, -r, r);
    m.b1.setZero();
    m.b2.setZero();
  }
  return m;
}

double loss(const AgeModel& model, const Matrix& inputs, const Matrix& targets) {
  check_shapes(model, inputs);
  const Matrix out = forward(model, inputs).output;
  return (targets - out).squaredNorm() / (2.0 * static_cast<double>(inputs.rows()));
}

Gradients loss_gradient(const AgeModel& model, const Matrix& inputs, const Matrix& targets,
                        double* loss_out) {
  check_shapes(model, inputs);
  const auto n = static_cast<double>(inputs.rows());
  const Activations a = forward(model, inputs);
  const Matrix err = a.output - targets;
  if (loss_out) *loss_out = err.squaredNorm() / (2.0 * n);

  const Matrix d2 = (err.array() * a.output.array() * (1.0 - a.output.array())).matrix() / n;
  const Matrix d1 =
      ((d2 * model.w2).array() * a.hidden.array() * (1.0 - a.hidden.array())).matrix();
  Gradients g;
  g.w2 = d2.transpose() * a.hidden;
  g.b2 = d2.colwise().sum().transpose();
  g.w1 = d1.transpose() * inputs;
  g.b1 = d1.colwise().sum().transpose();
  return g;
}

TrainResult train_encoder(const Matrix& inputs, const Matrix& targets, const TrainConfig& config) {
  validate(config);
  if (inputs.rows() == 0) throw Error(ErrorCode::EmptyInput, "no training instances");
  if (targets.rows() != inputs.rows() || targets.cols() != inputs.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "targets must match inputs row for row");
  }
  if (!inputs.allFinite() || !targets.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "encoder training data");
  }
  const Index dim = inputs.cols();
  const Index hidden = config.hidden_dim > 0 ? config.hidden_dim : dim;
  Rng rng(config.seed);
  TrainResult result;
  result.model = initialize(dim, hidden, config.init, rng.split());
  AgeModel& m = result.model;

  Gradients velocity{Matrix::Zero(hidden, dim), Vector::Zero(hidden), Matrix::Zero(dim, hidden),
                     Vector::Zero(dim)};
  const Index n = inputs.rows();
  const bool mini_batch = config.batch_size > 0 && config.batch_size < n;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::size_t cursor = order.size();
  Matrix batch_x, batch_t;

  result.loss_curve.reserve(static_cast<std::size_t>(config.iterations));
  for (int iter = 0; iter < config.iterations; ++iter) {
    double j = 0.0;
    Gradients g;
    if (mini_batch) {
      j = loss(m, inputs, targets);
      batch_x.resize(config.batch_size, dim);
      batch_t.resize(config.batch_size, dim);
      for (Index b = 0; b < config.batch_size; ++b) {
        if (cursor == order.size()) {
          rng.shuffle(order);
          cursor = 0;
        }
        const Index row = order[cursor++];
        batch_x.row(b) = inputs.row(row);
        batch_t.row(b) = targets.row(row);
      }
      g = loss_gradient(m, batch_x, batch_t);
    } else {
      g = loss_gradient(m, inputs, targets, &j);
    }
    if (!std::isfinite(j)) {
      throw Error(ErrorCode::NonFiniteLoss, "loss diverged at iteration " + std::to_string(iter));
    }
    result.loss_curve.push_back(j);
    momentum_step(m.w1, velocity.w1, g.w1, config.learning_rate, config.momentum);
    momentum_step(m.b1, velocity.b1, g.b1, config.learning_rate, config.momentum);
    momentum_step(m.w2, velocity.w2, g.w2, config.learning_rate, config.momentum);
    momentum_step(m.b2, velocity.b2, g.b2, config.learning_rate, config.momentum);
  }
  result.final_outputs = forward(m, inputs).output;
  result.final_loss =
      (targets - result.final_outputs).squaredNorm() / (2.0 * static_cast<double>(n));
  if (!std::isfinite(result.final_loss)) {
    throw Error(ErrorCode::NonFiniteLoss,
                "loss diverged at iteration " + std::to_string(config.iterations));
  }
  return result;
}

namespace {

void paired_rows(const FeatureSet& set, const ClassTargets& targets, Matrix& inputs,
                 Matrix& goal) {
  const auto rows = set.labeled_rows();
  inputs.resize(static_cast<Index>(rows.size()), set.dim());
  goal.resize(static_cast<Index>(rows.size()), targets.targets.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int c = set.labels[static_cast<std::size_t>(rows[i])];
    if (c >= targets.class_count()) throw Error(ErrorCode::MissingClass, "no target for class " + std::to_string(c));
    inputs.row(static_cast<Index>(i)) = set.features.row(rows[i]);
    goal.row(static_cast<Index>(i)) = targets.targets.row(c);
  }
}

}  // namespace

EncoderPair age_train(const FeatureSet& source_scaled, const FeatureSet& target_scaled,
                      const ClassTargets& targets, const TrainConfig& config) {
  validate(config);
  validate(source_scaled);
  validate(target_scaled);
  if (source_scaled.dim() != targets.targets.cols() ||
      target_scaled.dim() != targets.targets.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "aligned width differs from class targets");
  }
  Matrix xs, ts, xt, tt;
  paired_rows(source_scaled, targets, xs, ts);
  paired_rows(target_scaled, targets, xt, tt);

  Rng rng(config.seed);
  TrainConfig source_config = config;
  TrainConfig target_config = config;
  source_config.seed = rng.split();
  target_config.seed = rng.split();

  auto target_job = std::async(std::launch::async,
                               [&] { return train_encoder(xt, tt, target_config); });
  EncoderPair pair;
  pair.source = train_encoder(xs, ts, source_config);
  pair.target = target_job.get();
  return pair;
}

double within_class_variance(const Matrix& features, const Labels& labels) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "labels vs rows");
  }
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  double total = 0.0;
  int classes = 0;
  for (int c = 0; c <= max_label; ++c) {
    std::vector<Index> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) rows.push_back(static_cast<Index>(i));
    }
    if (rows.empty()) continue;
    Vector mean = Vector::Zero(features.cols());
    for (Index r : rows) mean += features.row(r).transpose();
    mean /= static_cast<double>(rows.size());
    double acc = 0.0;
    for (Index r : rows) acc += (features.row(r).transpose() - mean).squaredNorm();
    total += acc / static_cast<double>(rows.size());
    ++classes;
  }
  return classes > 0 ? total / classes : 0.0;
}

}  // namespace cdfag::age
