#include "cdfag/pipeline.hpp"

#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "cdfag/binary_io.hpp"
#include "cdfag/csv.hpp"
#include "cdfag/error.hpp"
#include "cdfag/persist.hpp"
#include "cdfag/random.hpp"

namespace cdfag::pipeline {

void validate(const PipelineConfig& config) {
  kema::validate(config.kema);
  age::validate(config.age);
  if (!(config.pca_retain > 0.0 && config.pca_retain <= 1.0)) {
    throw Error(ErrorCode::BadConfig, "pca_retain must lie in (0, 1]");
  }
  if (config.c_grid.empty() || config.gamma_grid.empty()) {
    throw Error(ErrorCode::BadConfig, "SVM grids must not be empty");
  }
  for (double v : config.c_grid) {
    if (!(v > 0.0)) throw Error(ErrorCode::BadConfig, "C grid values must be > 0");
  }
  for (double v : config.gamma_grid) {
    if (!(v > 0.0)) throw Error(ErrorCode::BadConfig, "gamma grid values must be > 0");
  }
  if (config.cv_folds < 2) throw Error(ErrorCode::BadConfig, "svm_folds must be >= 2");
  if (!(config.svm_tolerance > 0.0)) throw Error(ErrorCode::BadConfig, "svm_tolerance must be > 0");
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::BadConfig, key + ": expected true/false, got '" + v + "'");
}

double parse_real(const std::string& v, const std::string& key) {
  try {
    return csv::parse_double(v, key);
  } catch (const Error&) {
    throw Error(ErrorCode::BadConfig, key + ": '" + v + "' is not a number");
  }
}

long long parse_integer(const std::string& v, const std::string& key) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) {
    throw Error(ErrorCode::BadConfig, key + ": '" + v + "' is not an integer");
  }
  return out;
}

std::vector<double> parse_list(const std::string& v, const std::string& key) {
  std::vector<double> out;
  for (const auto& f : csv::split(v)) out.push_back(parse_real(f, key));
  if (out.empty()) throw Error(ErrorCode::BadConfig, key + ": empty list");
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += csv::format_double(v[i]);
  }
  return out;
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](auto& c, auto& v, auto& k) { c.seed = static_cast<std::uint64_t>(parse_integer(v, k)); }},
      {"pca_enabled", [](auto& c, auto& v, auto& k) { c.pca_enabled = parse_bool(v, k); }},
      {"pca_retain", [](auto& c, auto& v, auto& k) { c.pca_retain = parse_real(v, k); }},
      {"mu", [](auto& c, auto& v, auto& k) { c.kema.mu = parse_real(v, k); }},
      {"latent_dim", [](auto& c, auto& v, auto& k) { c.kema.latent_dim = parse_integer(v, k); }},
      {"knn_k", [](auto& c, auto& v, auto& k) { c.kema.knn_k = parse_integer(v, k); }},
      {"knn_mutual", [](auto& c, auto& v, auto& k) {
         c.kema.knn_symmetrization = parse_bool(v, k) ? spectral::KnnSymmetrization::mutual
                                                      : spectral::KnnSymmetrization::union_;
       }},
      {"kema_ridge", [](auto& c, auto& v, auto& k) { c.kema.ridge = parse_real(v, k); }},
      {"kernel", [](auto& c, auto& v, auto&) { c.kema.kernel = spectral::parse_kernel_kind(v); }},
      {"generalize", [](auto& c, auto& v, auto& k) { c.generalize = parse_bool(v, k); }},
      {"age_iterations", [](auto& c, auto& v, auto& k) { c.age.iterations = static_cast<int>(parse_integer(v, k)); }},
      {"age_learning_rate", [](auto& c, auto& v, auto& k) { c.age.learning_rate = parse_real(v, k); }},
      {"age_momentum", [](auto& c, auto& v, auto& k) { c.age.momentum = parse_real(v, k); }},
      {"age_hidden", [](auto& c, auto& v, auto& k) { c.age.hidden_dim = parse_integer(v, k); }},
      {"age_init", [](auto& c, auto& v, auto&) { c.age.init = age::parse_init_scheme(v); }},
      {"age_batch", [](auto& c, auto& v, auto& k) { c.age.batch_size = parse_integer(v, k); }},
      {"svm_c_grid", [](auto& c, auto& v, auto& k) { c.c_grid = parse_list(v, k); }},
      {"svm_gamma_grid", [](auto& c, auto& v, auto& k) { c.gamma_grid = parse_list(v, k); }},
      {"svm_folds", [](auto& c, auto& v, auto& k) { c.cv_folds = static_cast<int>(parse_integer(v, k)); }},
      {"svm_tolerance", [](auto& c, auto& v, auto& k) { c.svm_tolerance = parse_real(v, k); }},
  };
  return table;
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig config;
  for (const auto& kv : csv::parse_key_values(text, ErrorCode::BadConfig)) {
    const auto it = setters().find(kv.key);
    if (it == setters().end()) {
      throw Error(ErrorCode::BadConfig,
                  "line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
    }
    it->second(config, kv.value, kv.key);
  }
  validate(config);
  return config;
}

PipelineConfig load_config(const std::string& path) { return parse_config(io::read_file(path)); }

std::string format_config(const PipelineConfig& c) {
  std::ostringstream out;
  auto real = [](double v) { return csv::format_double(v); };
  out << "seed = " << c.seed << "\n"
      << "pca_enabled = " << (c.pca_enabled ? "true" : "false") << "\n"
      << "pca_retain = " << real(c.pca_retain) << "\n"
      << "mu = " << real(c.kema.mu) << "\n"
      << "latent_dim = " << c.kema.latent_dim << "\n"
      << "knn_k = " << c.kema.knn_k << "\n"
      << "knn_mutual = "
      << (c.kema.knn_symmetrization == spectral::KnnSymmetrization::mutual ? "true" : "false") << "\n"
      << "kema_ridge = " << real(c.kema.ridge) << "\n"
      << "kernel = " << spectral::to_string(c.kema.kernel) << "\n"
      << "generalize = " << (c.generalize ? "true" : "false") << "\n"
      << "age_iterations = " << c.age.iterations << "\n"
      << "age_learning_rate = " << real(c.age.learning_rate) << "\n"
      << "age_momentum = " << real(c.age.momentum) << "\n"
      << "age_hidden = " << c.age.hidden_dim << "\n"
      << "age_init = " << age::to_string(c.age.init) << "\n"
      << "age_batch = " << c.age.batch_size << "\n"
      << "svm_c_grid = " << join(c.c_grid) << "\n"
      << "svm_gamma_grid = " << join(c.gamma_grid) << "\n"
      << "svm_folds = " << c.cv_folds << "\n"
      << "svm_tolerance = " << real(c.svm_tolerance) << "\n";
  return out.str();
}

namespace {

std::set<int> label_set(const Labels& labels) {
  std::set<int> s;
  for (int l : labels) {
    if (l != kUnlabeled) s.insert(l);
  }
  return s;
}

Matrix rows_of(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace

PipelineModel train_pipeline(const FeatureSet& source, const FeatureSet& target,
                             const PipelineConfig& config, TrainingTrace* trace) {
  with_stage("config", [&] { validate(config); });
  with_stage("input", [&] {
    validate(source);
    validate(target);
  });
  const auto source_classes = label_set(source.labels);
  const auto target_classes = label_set(target.labels);
  if (source_classes != target_classes) {
    throw Error(ErrorCode::ClassSetMismatch, "source and target label sets differ", "input");
  }
  if (source_classes.empty()) throw Error(ErrorCode::InsufficientLabels, "no labeled samples", "input");
  const int class_count = *source_classes.rbegin() + 1;
  if (static_cast<int>(source_classes.size()) != class_count) {
    throw Error(ErrorCode::MissingClass, "class ids must be contiguous from 0", "input");
  }

  Rng seeds(config.seed);
  const std::uint64_t age_seed = seeds.split();
  const std::uint64_t cv_seed = seeds.split();

  PipelineModel model;
  model.config = config;
  model.class_count = class_count;

  Matrix source_reduced = source.features;
  Matrix target_reduced = target.features;
  if (config.pca_enabled) {
    with_stage("pca", [&] {
      model.source_pca = encoding::pca_fit(source.features, config.pca_retain);
      model.target_pca = encoding::pca_fit(target.features, config.pca_retain);
      source_reduced = encoding::pca_project(*model.source_pca, source.features);
      target_reduced = encoding::pca_project(*model.target_pca, target.features);
    });
  }

  DomainBundle bundle{{FeatureSet{source_reduced, source.labels},
                       FeatureSet{target_reduced, target.labels}},
                      class_count};
  model.alignment = with_stage("kema", [&] { return kema::kema_fit(bundle, config.kema); });
  const Matrix source_aligned = kema::kema_project(model.alignment, 0, source_reduced);
  const Matrix target_aligned = kema::kema_project(model.alignment, 1, target_reduced);

  Matrix source_features, target_features_;
  std::vector<double> source_loss, target_loss;
  with_stage("age", [&] {
    Matrix pooled(source_aligned.rows() + target_aligned.rows(), source_aligned.cols());
    pooled << source_aligned, target_aligned;
    model.scaler = age::RangeScaler::fit(pooled);
    const FeatureSet source_scaled{model.scaler.transform(source_aligned), source.labels};
    const FeatureSet target_scaled{model.scaler.transform(target_aligned), target.labels};
    model.targets = age::class_targets(FeatureSet{source_aligned, source.labels},
                                       FeatureSet{target_aligned, target.labels}, model.scaler,
                                       class_count);
    if (config.generalize) {
      age::TrainConfig train = config.age;
      train.seed = age_seed;
      auto pair = age::age_train(source_scaled, target_scaled, model.targets, train);
      model.source_encoder = pair.source.model;
      model.target_encoder = pair.target.model;
      source_loss = std::move(pair.source.loss_curve);
      target_loss = std::move(pair.target.loss_curve);
      source_features = age::age_generalize(*model.source_encoder, source_scaled.features);
      target_features_ = age::age_generalize(*model.target_encoder, target_scaled.features);
    } else {
      source_features = source_scaled.features;
      target_features_ = target_scaled.features;
    }
  });

  const auto source_rows = source.labeled_rows();
  const auto target_rows = target.labeled_rows();
  FeatureSet pooled;
  pooled.features.resize(static_cast<Index>(source_rows.size() + target_rows.size()),
                         source_features.cols());
  pooled.features << rows_of(source_features, source_rows), rows_of(target_features_, target_rows);
  for (Index r : source_rows) pooled.labels.push_back(source.labels[static_cast<std::size_t>(r)]);
  for (Index r : target_rows) pooled.labels.push_back(target.labels[static_cast<std::size_t>(r)]);

  svm::GridResult grid;
  with_stage("svm", [&] {
    grid = svm::grid_search_cv(pooled, config.c_grid, config.gamma_grid, config.cv_folds, cv_seed,
                               config.svm_tolerance);
    model.svm = svm::svm_train(pooled, grid.best);
  });

  if (trace) {
    trace->source_reduced = source_reduced;
    trace->target_reduced = target_reduced;
    trace->source_aligned = source_aligned;
    trace->target_aligned = target_aligned;
    trace->source_features = source_features;
    trace->target_features = target_features_;
    trace->svm_training = pooled;
    trace->grid = grid;
    trace->source_loss = std::move(source_loss);
    trace->target_loss = std::move(target_loss);
  }
  return model;
}

Matrix target_features(const PipelineModel& model, const Matrix& raw) {
  Matrix x = raw;
  if (model.target_pca) {
    x = with_stage("pca", [&] { return encoding::pca_project(*model.target_pca, raw); });
  }
  const Matrix aligned = with_stage("kema", [&] { return kema::kema_project(model.alignment, 1, x); });
  return with_stage("age", [&] {
    const Matrix scaled = model.scaler.transform(aligned);
    return model.target_encoder ? age::age_generalize(*model.target_encoder, scaled) : scaled;
  });
}

TestOutput test_pipeline(const PipelineModel& model, const FeatureSet& target_test) {
  with_stage("input", [&] { validate(target_test, model.class_count); });
  TestOutput out;
  out.features = target_features(model, target_test.features);
  out.predictions = with_stage("svm", [&] { return svm::svm_predict(model.svm, out.features); });
  if (target_test.size() > 0 &&
      target_test.labeled_count() == static_cast<std::size_t>(target_test.size())) {
    out.report = evaluate(out.predictions, target_test.labels, model.class_count);
  }
  return out;
}

void validate(const PipelineModel& m) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::CorruptModel, what); };
  if (m.version != kPipelineVersion) {
    throw Error(ErrorCode::VersionMismatch, "pipeline version " + std::to_string(m.version));
  }
  if (m.alignment.domain_count() != 2) fail("pipeline alignment must have two domains");
  const Index n = m.alignment.latent_dim();
  if (m.source_pca.has_value() != m.target_pca.has_value()) fail("PCA present for one domain only");
  if (m.source_pca && m.source_pca->output_dim() != m.alignment.anchors[0].cols()) {
    fail("source PCA output does not match alignment input");
  }
  if (m.target_pca && m.target_pca->output_dim() != m.alignment.anchors[1].cols()) {
    fail("target PCA output does not match alignment input");
  }
  if (m.scaler.dim() != n) fail("scaler width differs from latent dimension");
  if (m.targets.targets.cols() != n || m.targets.class_count() != m.class_count) {
    fail("class targets do not match latent dimension or class count");
  }
  if (m.source_encoder.has_value() != m.target_encoder.has_value()) fail("encoder pair incomplete");
  for (const auto* e : {&m.source_encoder, &m.target_encoder}) {
    if (e->has_value() && (*e)->input_dim() != n) fail("encoder width differs from latent dimension");
  }
  if (m.svm.dim != n) fail("SVM input width differs from latent dimension");
}

std::string encode(const PipelineModel& m) {
  io::Writer body, head, pca, align, scaler, targets, enc, svm_w, cfg;
  head.u32(m.version);
  head.i64(m.class_count);
  body.section("HEAD", head);

  pca.boolean(m.source_pca.has_value());
  if (m.source_pca) {
    io::write(pca, *m.source_pca);
    io::write(pca, *m.target_pca);
  }
  body.section("PCA_", pca);
  io::write(align, m.alignment);
  body.section("ALGN", align);
  io::write(scaler, m.scaler);
  body.section("SCAL", scaler);
  io::write(targets, m.targets);
  body.section("TARG", targets);
  enc.boolean(m.generalizes());
  if (m.generalizes()) {
    io::write(enc, *m.source_encoder);
    io::write(enc, *m.target_encoder);
  }
  body.section("ENCS", enc);
  io::write(svm_w, m.svm);
  body.section("SVM_", svm_w);
  cfg.str(format_config(m.config));
  body.section("CONF", cfg);
  return io::encode_file("pipeline", body);
}

PipelineModel decode(std::string_view bytes) {
  io::Reader body = io::decode_file(bytes, "pipeline");
  PipelineModel m;
  auto head = body.section("HEAD");
  m.version = head.u32();
  if (m.version != kPipelineVersion) {
    throw Error(ErrorCode::VersionMismatch, "pipeline version " + std::to_string(m.version));
  }
  m.class_count = static_cast<int>(head.i64());
  head.expect_done();

  auto pca = body.section("PCA_");
  if (pca.boolean()) {
    m.source_pca = io::read_pca(pca);
    m.target_pca = io::read_pca(pca);
  }
  pca.expect_done();
  auto align = body.section("ALGN");
  m.alignment = io::read_alignment(align);
  align.expect_done();
  auto scaler = body.section("SCAL");
  m.scaler = io::read_scaler(scaler);
  scaler.expect_done();
  auto targets = body.section("TARG");
  m.targets = io::read_targets(targets);
  targets.expect_done();
  auto enc = body.section("ENCS");
  if (enc.boolean()) {
    m.source_encoder = io::read_age(enc);
    m.target_encoder = io::read_age(enc);
  }
  enc.expect_done();
  auto svm_r = body.section("SVM_");
  m.svm = io::read_svm(svm_r);
  svm_r.expect_done();
  auto cfg = body.section("CONF");
  try {
    m.config = parse_config(cfg.str());
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptModel, "stored config: " + e.detail());
  }
  cfg.expect_done();
  body.expect_done();
  validate(m);
  return m;
}

void save_model(const PipelineModel& model, const std::string& path) {
  validate(model);
  io::write_file(path, encode(model));
}

PipelineModel load_model(const std::string& path) { return decode(io::read_file(path)); }

}  // namespace cdfag::pipeline
