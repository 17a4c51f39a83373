#include "cdfag/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <map>

#include "cdfag/binary_io.hpp"
#include "cdfag/csv.hpp"
#include "cdfag/error.hpp"
#include "cdfag/random.hpp"
#include "cdfag/svm.hpp"

namespace cdfag::synth {

void validate(const SynthSpec& s) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::BadSpec, what); };
  if (s.class_count < 2) bad("class_count must be >= 2");
  if (s.dim < 1) bad("dim must be >= 1");
  if (s.samples_per_class < 1) bad("samples_per_class must be >= 1");
  for (double v : {s.noise, s.class_separation, s.class_spread, s.translation}) {
    if (!std::isfinite(v) || v < 0.0) bad("scales must be finite and >= 0");
  }
  if (!std::isfinite(s.warp_scale) || s.warp_scale <= 0.0) bad("warp_scale must be > 0");
  if (s.means) {
    if (s.means->rows() != s.class_count || s.means->cols() != s.dim) bad("means must be class_count x dim");
    if (!s.means->allFinite()) bad("means must be finite");
  }
  if (s.rotation) {
    const Matrix& r = *s.rotation;
    if (r.rows() != s.dim || r.cols() != s.dim) bad("rotation must be dim x dim");
    const Matrix gram = r.transpose() * r;
    if ((gram - Matrix::Identity(s.dim, s.dim)).cwiseAbs().maxCoeff() > 1e-8) {
      bad("rotation must be orthogonal");
    }
  }
}

namespace {

double spec_real(const csv::KeyValue& kv) {
  try {
    return csv::parse_double(kv.value, kv.key);
  } catch (const Error& e) {
    throw Error(ErrorCode::BadSpec, e.detail());
  }
}

long long spec_int(const csv::KeyValue& kv) {
  const double v = spec_real(kv);
  if (v != std::floor(v) || std::abs(v) > 1e15) {
    throw Error(ErrorCode::BadSpec, kv.key + ": '" + kv.value + "' is not an integer");
  }
  return static_cast<long long>(v);
}

bool spec_bool(const csv::KeyValue& kv) {
  if (kv.value == "true" || kv.value == "1") return true;
  if (kv.value == "false" || kv.value == "0") return false;
  throw Error(ErrorCode::BadSpec, kv.key + ": expected true/false");
}

Matrix random_rotation(Index dim, Rng& rng) {
  Matrix g(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace

SynthSpec parse_spec(const std::string& text) {
  SynthSpec s;
  using Apply = std::function<void(SynthSpec&, const csv::KeyValue&)>;
  static const std::map<std::string, Apply> table = {
      {"class_count", [](SynthSpec& s, const auto& kv) { s.class_count = static_cast<int>(spec_int(kv)); }},
      {"dim", [](SynthSpec& s, const auto& kv) { s.dim = spec_int(kv); }},
      {"samples_per_class", [](SynthSpec& s, const auto& kv) { s.samples_per_class = spec_int(kv); }},
      {"noise", [](SynthSpec& s, const auto& kv) { s.noise = spec_real(kv); }},
      {"class_separation", [](SynthSpec& s, const auto& kv) { s.class_separation = spec_real(kv); }},
      {"class_spread", [](SynthSpec& s, const auto& kv) { s.class_spread = spec_real(kv); }},
      {"translation", [](SynthSpec& s, const auto& kv) { s.translation = spec_real(kv); }},
      {"warp", [](SynthSpec& s, const auto& kv) { s.warp = spec_bool(kv); }},
      {"warp_scale", [](SynthSpec& s, const auto& kv) { s.warp_scale = spec_real(kv); }},
      {"target_identity", [](SynthSpec& s, const auto& kv) { s.target_identity = spec_bool(kv); }},
      {"seed", [](SynthSpec& s, const auto& kv) { s.seed = static_cast<std::uint64_t>(spec_int(kv)); }},
  };
  for (const auto& kv : csv::parse_key_values(text, ErrorCode::BadSpec)) {
    const auto it = table.find(kv.key);
    if (it == table.end()) {
      throw Error(ErrorCode::BadSpec, "line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
    }
    it->second(s, kv);
  }
  validate(s);
  return s;
}

SynthSpec load_spec(const std::string& path) { return parse_spec(io::read_file(path)); }

DomainBundle generate(const SynthSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  const Index d = spec.dim;
  const int c = spec.class_count;

  Matrix means(c, d);
  if (spec.means) {
    means = *spec.means;
  } else {
    for (Index i = 0; i < c; ++i) {
      for (Index j = 0; j < d; ++j) means(i, j) = spec.class_separation * rng.normal();
    }
  }
  const Matrix rotation = spec.rotation ? *spec.rotation : random_rotation(d, rng);
  Vector offset(d);
  for (Index j = 0; j < d; ++j) offset(j) = spec.translation * rng.normal();

  const Index n = c * spec.samples_per_class;
  FeatureSet a{Matrix(n, d), Labels(static_cast<std::size_t>(n))};
  FeatureSet b{Matrix(n, d), Labels(static_cast<std::size_t>(n))};
  Vector z(d);
  Index row = 0;
  for (int k = 0; k < c; ++k) {
    for (Index i = 0; i < spec.samples_per_class; ++i, ++row) {
      for (Index j = 0; j < d; ++j) z(j) = means(k, j) + spec.class_spread * rng.normal();
      Vector mapped = z;
      if (!spec.target_identity) {
        mapped = rotation * z + offset;
        if (spec.warp) {
          mapped = (mapped.array() / spec.warp_scale).tanh() * spec.warp_scale;
        }
      }
      for (Index j = 0; j < d; ++j) a.features(row, j) = z(j) + spec.noise * rng.normal();
      for (Index j = 0; j < d; ++j) b.features(row, j) = mapped(j) + spec.noise * rng.normal();
      a.labels[static_cast<std::size_t>(row)] = k;
      b.labels[static_cast<std::size_t>(row)] = k;
    }
  }
  return DomainBundle{{std::move(a), std::move(b)}, c};
}

std::string to_string(Method m) {
  switch (m) {
    case Method::na: return "na";
    case Method::kema: return "kema";
    case Method::cdfag: return "cdfag";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  if (text == "na") return Method::na;
  if (text == "kema") return Method::kema;
  if (text == "cdfag") return Method::cdfag;
  throw Error(ErrorCode::BadConfig, "unknown method '" + text + "' (na, kema, cdfag)");
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  for (const auto& f : csv::split(list)) out.push_back(parse_method(f));
  if (out.empty()) throw Error(ErrorCode::BadConfig, "no methods given");
  return out;
}

SplitData split_bundle(const DomainBundle& bundle, const Splits& splits, std::uint64_t seed) {
  if (bundle.domains.size() != 2) {
    throw Error(ErrorCode::BadConfig, "split needs a source and a target domain");
  }
  if (splits.source_train < 1 || splits.target_train < 1 || splits.target_test < 1) {
    throw Error(ErrorCode::BadConfig, "split counts must be >= 1");
  }
  const FeatureSet& src = bundle.domains[0];
  const FeatureSet& tgt = bundle.domains[1];
  validate(src, bundle.class_count);
  validate(tgt, bundle.class_count);

  auto by_class = [&](const FeatureSet& set) {
    std::vector<std::vector<Index>> rows(static_cast<std::size_t>(bundle.class_count));
    for (std::size_t i = 0; i < set.labels.size(); ++i) {
      if (set.labels[i] != kUnlabeled) {
        rows[static_cast<std::size_t>(set.labels[i])].push_back(static_cast<Index>(i));
      }
    }
    return rows;
  };
  const auto src_rows = by_class(src);
  const auto tgt_rows = by_class(tgt);

  Rng rng(seed);
  std::vector<Index> s_train, s_unl, t_train, t_test, t_unl;
  for (int k = 0; k < bundle.class_count; ++k) {
    auto s = src_rows[static_cast<std::size_t>(k)];
    auto t = tgt_rows[static_cast<std::size_t>(k)];
    if (static_cast<Index>(s.size()) < splits.source_train ||
        static_cast<Index>(t.size()) < splits.target_train + splits.target_test) {
      throw Error(ErrorCode::SplitTooLarge,
                  "class " + std::to_string(k) + " has " + std::to_string(s.size()) + " source and " +
                      std::to_string(t.size()) + " target rows");
    }
    rng.shuffle(s);
    rng.shuffle(t);
    const auto st = static_cast<std::ptrdiff_t>(splits.source_train);
    const auto tt = static_cast<std::ptrdiff_t>(splits.target_test);
    const auto tr = static_cast<std::ptrdiff_t>(splits.target_train);
    s_train.insert(s_train.end(), s.begin(), s.begin() + st);
    s_unl.insert(s_unl.end(), s.begin() + st, s.end());
    t_test.insert(t_test.end(), t.begin(), t.begin() + tt);
    t_train.insert(t_train.end(), t.begin() + tt, t.begin() + tt + tr);
    t_unl.insert(t_unl.end(), t.begin() + tt + tr, t.end());
  }

  auto assemble = [&](const FeatureSet& set, std::vector<Index> labeled, std::vector<Index> unlabeled) {
    if (!splits.use_unlabeled) unlabeled.clear();
    std::vector<std::pair<Index, bool>> rows;
    for (Index r : labeled) rows.emplace_back(r, true);
    for (Index r : unlabeled) rows.emplace_back(r, false);
    std::sort(rows.begin(), rows.end());
    std::vector<Index> order;
    for (const auto& [r, keep] : rows) order.push_back(r);
    FeatureSet out = set.subset(order);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].second) out.labels[i] = kUnlabeled;
    }
    return out;
  };
  std::sort(t_test.begin(), t_test.end());
  return SplitData{assemble(src, s_train, s_unl), assemble(tgt, t_train, t_unl), tgt.subset(t_test)};
}

EvalReport run_protocol(const DomainBundle& bundle, Method method, const Splits& splits,
                        const pipeline::PipelineConfig& config, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const SplitData data = split_bundle(bundle, splits, seed);
  Labels predictions;
  if (method == Method::na) {
    if (data.source.dim() != data.target.dim()) {
      throw Error(ErrorCode::DimensionMismatch, "pooling raw features needs equal dimensions");
    }
    const FeatureSet s = data.source.labeled_only();
    const FeatureSet t = data.target.labeled_only();
    FeatureSet pooled;
    pooled.features.resize(s.size() + t.size(), s.dim());
    pooled.features << s.features, t.features;
    pooled.labels = s.labels;
    pooled.labels.insert(pooled.labels.end(), t.labels.begin(), t.labels.end());
    Rng seeds(seed);
    const auto grid = svm::grid_search_cv(pooled, config.c_grid, config.gamma_grid,
                                          config.cv_folds, seeds.split(), config.svm_tolerance);
    const auto model = svm::svm_train(pooled, grid.best);
    predictions = svm::svm_predict(model, data.target_test.features);
  } else {
    pipeline::PipelineConfig cfg = config;
    cfg.seed = seed;
    cfg.generalize = method == Method::cdfag;
    const auto model = pipeline::train_pipeline(data.source, data.target, cfg);
    predictions = pipeline::test_pipeline(model, data.target_test).predictions;
  }
  EvalReport report = evaluate(predictions, data.target_test.labels, bundle.class_count);
  report.method = to_string(method);
  report.seed = seed;
  report.source_train = splits.source_train;
  report.target_train = splits.target_train;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Summary repeat_protocol(const SynthSpec& spec, Method method, const Splits& splits,
                        const pipeline::PipelineConfig& config, int seeds) {
  if (seeds < 1) throw Error(ErrorCode::BadConfig, "seeds must be >= 1");
  std::vector<std::future<EvalReport>> runs;
  for (int i = 0; i < seeds; ++i) {
    runs.push_back(std::async(std::launch::async, [=, &config] {
      SynthSpec s = spec;
      s.seed = spec.seed + static_cast<std::uint64_t>(i);
      return run_protocol(generate(s), method, splits, config, s.seed);
    }));
  }
  Summary out;
  for (auto& r : runs) out.runs.push_back(r.get());
  for (const auto& r : out.runs) out.mean_ap += r.average_precision;
  out.mean_ap /= seeds;
  if (seeds > 1) {
    double ss = 0.0;
    for (const auto& r : out.runs) ss += (r.average_precision - out.mean_ap) * (r.average_precision - out.mean_ap);
    out.std_ap = std::sqrt(ss / (seeds - 1));
  }
  return out;
}

namespace {

template <typename T, typename Apply>
std::vector<SweepPoint> sweep(const SynthSpec& spec, Splits splits,
                              const pipeline::PipelineConfig& config, const std::vector<T>& values,
                              int seeds, Apply apply) {
  std::vector<SweepPoint> out;
  for (const T& v : values) {
    pipeline::PipelineConfig cfg = config;
    Splits sp = splits;
    apply(cfg, sp, v);
    out.push_back(SweepPoint{static_cast<double>(v), repeat_protocol(spec, Method::cdfag, sp, cfg, seeds)});
  }
  return out;
}

}  // namespace

std::vector<SweepPoint> mu_sweep(const SynthSpec& spec, const Splits& splits,
                                 const pipeline::PipelineConfig& config,
                                 const std::vector<double>& mus, int seeds) {
  return sweep(spec, splits, config, mus, seeds,
               [](auto& cfg, auto&, double mu) { cfg.kema.mu = mu; });
}

std::vector<SweepPoint> latent_sweep(const SynthSpec& spec, const Splits& splits,
                                     const pipeline::PipelineConfig& config,
                                     const std::vector<Index>& dims, int seeds) {
  return sweep(spec, splits, config, dims, seeds,
               [](auto& cfg, auto&, Index n) { cfg.kema.latent_dim = n; });
}

std::vector<SweepPoint> target_train_sweep(const SynthSpec& spec, const Splits& splits,
                                           const pipeline::PipelineConfig& config,
                                           const std::vector<Index>& counts, int seeds) {
  return sweep(spec, splits, config, counts, seeds,
               [](auto&, auto& sp, Index n) { sp.target_train = n; });
}

void write_report(std::ostream& out, const std::vector<EvalReport>& reports, int class_count) {
  out << "method,S_train,T_train,seed,ap";
  for (int k = 0; k < class_count; ++k) out << ",p" << k;
  out << "\n";
  for (const auto& r : reports) {
    out << r.method << "," << r.source_train << "," << r.target_train << "," << r.seed << ","
        << csv::format_double(r.average_precision);
    for (double p : r.precision) out << "," << csv::format_double(p);
    out << "\n";
  }
}

void write_sweep(std::ostream& out, const std::string& key, const std::vector<SweepPoint>& points) {
  out << key << ",ap\n";
  for (const auto& p : points) {
    out << csv::format_double(p.value) << "," << csv::format_double(p.summary.mean_ap) << "\n";
  }
}

namespace {

double nn_accuracy(const FeatureSet& train, const FeatureSet& test, bool leave_one_out) {
  const Matrix d = squared_distances(test.features, train.features);
  Index correct = 0;
  for (Index i = 0; i < test.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int label = kUnlabeled;
    for (Index j = 0; j < train.size(); ++j) {
      if (leave_one_out && i == j) continue;
      if (d(i, j) < best) {
        best = d(i, j);
        label = train.labels[static_cast<std::size_t>(j)];
      }
    }
    if (label == test.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return test.size() > 0 ? static_cast<double>(correct) / static_cast<double>(test.size()) : 0.0;
}

}  // namespace

double within_domain_1nn(const FeatureSet& domain) {
  if (domain.size() < 2) throw Error(ErrorCode::InsufficientData, "1-NN needs two rows");
  return nn_accuracy(domain, domain, true);
}

double cross_domain_1nn(const FeatureSet& train, const FeatureSet& test) {
  if (train.size() < 1) throw Error(ErrorCode::InsufficientData, "1-NN needs a training row");
  if (train.dim() != test.dim()) throw Error(ErrorCode::DimensionMismatch, "1-NN dimension mismatch");
  return nn_accuracy(train, test, false);
}

}  // namespace cdfag::synth
