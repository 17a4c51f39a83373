#pragma once

// Synthetic two-domain generator with a controllable modality gap, and the
// harness comparing no adaptation, alignment only, and the full pipeline.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cdfag/metrics.hpp"
#include "cdfag/pipeline.hpp"
#include "cdfag/types.hpp"

namespace cdfag::synth {

struct SynthSpec {
  int class_count = 4;
  Index dim = 40;
  Index samples_per_class = 30;  // per domain
  double noise = 0.15;
  double class_separation = 0.1;  // std of the class means
  std::optional<Matrix> means;     // class_count x dim; drawn with class_separation when absent
  double class_spread = 0.1;      // within-class std in generative space
  double translation = 0.1;       // std of the target offset
  bool warp = true;
  double warp_scale = 1.5;        // target map uses warp_scale * tanh(x / warp_scale)
  std::optional<Matrix> rotation;  // random orthogonal when absent
  bool target_identity = false;    // target map = identity (no rotation, offset or warp)
  std::uint64_t seed = 1;
};

/// Throws BadSpec.
void validate(const SynthSpec& spec);

/// `key = value` lines, same syntax as the pipeline config.
SynthSpec parse_spec(const std::string& text);
SynthSpec load_spec(const std::string& path);

/// Fully labeled bundle: domain 0 is the source, domain 1 the target.
/// Both domains share the same generative draws, row-aligned and grouped
/// by class.
DomainBundle generate(const SynthSpec& spec);

enum class Method { na, kema, cdfag };
std::string to_string(Method m);
Method parse_method(const std::string& text);
std::vector<Method> parse_methods(const std::string& list);

/// Per-class counts. Rows left over after drawing the labeled and test rows
/// join training as unlabeled samples when `use_unlabeled` is set.
struct Splits {
  Index source_train = 25;
  Index target_train = 5;
  Index target_test = 10;
  bool use_unlabeled = true;
};

struct SplitData {
  FeatureSet source;
  FeatureSet target;
  FeatureSet target_test;
};

/// Stratified random split of a fully labeled two-domain bundle.
/// Throws SplitTooLarge when a class lacks the requested rows.
SplitData split_bundle(const DomainBundle& bundle, const Splits& splits, std::uint64_t seed);

/// One run of a method on a fresh split; the report covers the held-out
/// target rows.
EvalReport run_protocol(const DomainBundle& bundle, Method method, const Splits& splits,
                        const pipeline::PipelineConfig& config, std::uint64_t seed);

struct Summary {
  double mean_ap = 0.0;
  double std_ap = 0.0;
  std::vector<EvalReport> runs;
};

/// Runs seeds spec.seed .. spec.seed + seeds - 1, each regenerating the data with that seed and
/// reusing it for the split and the pipeline. Seeds run concurrently.
Summary repeat_protocol(const SynthSpec& spec, Method method, const Splits& splits,
                        const pipeline::PipelineConfig& config, int seeds);

struct SweepPoint {
  double value = 0.0;
  Summary summary;
};

std::vector<SweepPoint> mu_sweep(const SynthSpec& spec, const Splits& splits,
                                 const pipeline::PipelineConfig& config,
                                 const std::vector<double>& mus, int seeds);
std::vector<SweepPoint> latent_sweep(const SynthSpec& spec, const Splits& splits,
                                     const pipeline::PipelineConfig& config,
                                     const std::vector<Index>& dims, int seeds);
std::vector<SweepPoint> target_train_sweep(const SynthSpec& spec, const Splits& splits,
                                           const pipeline::PipelineConfig& config,
                                           const std::vector<Index>& counts, int seeds);

/// method,S_train,T_train,seed,ap,p0..p{c-1}
void write_report(std::ostream& out, const std::vector<EvalReport>& reports, int class_count);
/// `key,ap` rows, ap averaged over seeds.
void write_sweep(std::ostream& out, const std::string& key, const std::vector<SweepPoint>& points);

/// Leave-one-out 1-NN accuracy within one domain, and accuracy of the
/// target rows classified by nearest source row.
double within_domain_1nn(const FeatureSet& domain);
double cross_domain_1nn(const FeatureSet& train, const FeatureSet& test);

}  // namespace cdfag::synth
