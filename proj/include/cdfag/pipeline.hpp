#pragma once

// End-to-end training (PCA -> alignment -> encoders -> SVM) and testing of
// the cross-dataset pipeline, with persistence.

#include <optional>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cdfag/age.hpp"
#include "cdfag/encoding.hpp"
#include "cdfag/kema.hpp"
#include "cdfag/metrics.hpp"
#include "cdfag/svm.hpp"

namespace cdfag::pipeline {

/// Encoder defaults for the pipeline: as age::TrainConfig but with the
/// scaled initialization, since unit-uniform weights saturate every hidden
/// unit at the default latent width.
inline age::TrainConfig default_encoder_config() {
  age::TrainConfig c;
  c.init = age::InitScheme::scaled_uniform;
  return c;
}

struct PipelineConfig {
  std::uint64_t seed = 0;
  bool pca_enabled = true;
  double pca_retain = 0.99;
  kema::KemaConfig kema;
  bool generalize = true;  // false stops after alignment (KEMA-only)
  age::TrainConfig age = default_encoder_config();  // age.seed is derived from `seed`
  std::vector<double> c_grid = svm::default_c_grid();
  std::vector<double> gamma_grid = svm::default_gamma_grid();
  int cv_folds = 5;
  double svm_tolerance = 1e-3;
};

void validate(const PipelineConfig& config);

/// Line-oriented `key = value` text; `#` starts a comment. Unknown keys and
/// malformed values throw BadConfig.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);
/// Canonical text listing every key, readable by parse_config.
std::string format_config(const PipelineConfig& config);

inline constexpr std::uint32_t kPipelineVersion = 1;

struct PipelineModel {
  std::uint32_t version = kPipelineVersion;
  int class_count = 0;
  std::optional<encoding::PcaModel> source_pca;
  std::optional<encoding::PcaModel> target_pca;
  kema::AlignmentModel alignment;
  age::RangeScaler scaler;
  age::ClassTargets targets;
  std::optional<age::AgeModel> source_encoder;
  std::optional<age::AgeModel> target_encoder;
  svm::SvmModel svm;
  PipelineConfig config;

  bool generalizes() const { return target_encoder.has_value(); }
};

/// Throws CorruptModel when the stage dimensions do not chain.
void validate(const PipelineModel& model);

/// Intermediate matrices of a training run, rows in input order.
struct TrainingTrace {
  Matrix source_reduced;
  Matrix target_reduced;
  Matrix source_aligned;
  Matrix target_aligned;
  Matrix source_features;  // SVM inputs for every source row
  Matrix target_features;
  FeatureSet svm_training;
  svm::GridResult grid;
  std::vector<double> source_loss;
  std::vector<double> target_loss;
};

/// Trains every stage on labeled + unlabeled rows of both domains.
/// Errors carry the failing stage name.
PipelineModel train_pipeline(const FeatureSet& source, const FeatureSet& target,
                             const PipelineConfig& config, TrainingTrace* trace = nullptr);

/// Target-domain features fed to the classifier: PCA, alignment, scaling
/// and (when trained) the target encoder.
Matrix target_features(const PipelineModel& model, const Matrix& raw);

struct TestOutput {
  Labels predictions;
  Matrix features;
  std::optional<EvalReport> report;  // only when every row is labeled
};

TestOutput test_pipeline(const PipelineModel& model, const FeatureSet& target_test);

std::string encode(const PipelineModel& model);
PipelineModel decode(std::string_view bytes);
void save_model(const PipelineModel& model, const std::string& path);
PipelineModel load_model(const std::string& path);

}  // namespace cdfag::pipeline
