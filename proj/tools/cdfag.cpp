// Command-line front end. Exit status: 0 success, 2 configuration error,
// 3 data error, 4 numerical failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cdfag/binary_io.hpp"
#include "cdfag/csv.hpp"
#include "cdfag/encoding.hpp"
#include "cdfag/error.hpp"
#include "cdfag/kema.hpp"
#include "cdfag/persist.hpp"
#include "cdfag/pipeline.hpp"
#include "cdfag/synth.hpp"

namespace {

using namespace cdfag;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  return out;
}

std::vector<double> parse_grid(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& f : csv::split(text)) {
    try {
      out.push_back(csv::parse_double(f, what));
    } catch (const Error& e) {
      throw Error(ErrorCode::BadConfig, e.detail());
    }
  }
  return out;
}

std::map<std::string, int> read_video_labels(const std::string& path) {
  std::map<std::string, int> labels;
  std::istringstream in(io::read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = csv::split(line);
    if (fields.empty() || (fields.size() == 1 && fields[0].empty())) continue;
    if (fields.size() != 2) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": expected video_id,label");
    }
    if (line_no == 1 && fields[1] == "label") continue;
    labels[fields[0]] = csv::parse_int(fields[1], path + ":" + std::to_string(line_no));
  }
  return labels;
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  auto out = open_out(path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << csv::format_double(m(i, j));
    out << "\n";
  }
}

void write_loss_log(const std::string& path, const std::vector<double>& source,
                    const std::vector<double>& target) {
  auto out = open_out(path);
  out << "encoder,iteration,loss\n";
  for (std::size_t i = 0; i < source.size(); ++i) out << "source," << i << "," << csv::format_double(source[i]) << "\n";
  for (std::size_t i = 0; i < target.size(); ++i) out << "target," << i << "," << csv::format_double(target[i]) << "\n";
}

void write_predictions(const std::string& path, const Labels& predictions) {
  auto out = open_out(path);
  out << "row,predicted_label\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) out << i << "," << predictions[i] << "\n";
}

void write_eval_report(const std::string& path, const EvalReport& r) {
  auto out = open_out(path);
  const auto c = r.confusion.rows();
  out << "class,count,precision";
  for (Index j = 0; j < c; ++j) out << ",pred" << j;
  out << "\n";
  for (Index i = 0; i < c; ++i) {
    out << i << "," << r.class_counts[static_cast<std::size_t>(i)] << ","
        << csv::format_double(r.precision[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < c; ++j) out << "," << r.confusion(i, j);
    out << "\n";
  }
  out << "mean," << r.confusion.sum() << "," << csv::format_double(r.average_precision) << "\n";
}

Index domain_index(const std::string& name) {
  if (name == "source") return 0;
  if (name == "target") return 1;
  throw Error(ErrorCode::UnknownDomain, "domain must be source or target, got '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-dataset feature alignment and generalization"};
  app.require_subcommand(1);
  std::function<void()> run;

  // codebook
  std::string cb_in, cb_out;
  Index cb_size = encoding::kDefaultCodebookSize, cb_sample = encoding::kDefaultPerVideoSample;
  std::uint64_t cb_seed = 0;
  auto* codebook = app.add_subcommand("codebook", "Cluster sampled descriptors into a codebook");
  codebook->add_option("--in", cb_in, "Directory of descriptor CSV files")->required();
  codebook->add_option("--size", cb_size, "Number of codewords");
  codebook->add_option("--sample", cb_sample, "Descriptors sampled per video");
  codebook->add_option("--seed", cb_seed);
  codebook->add_option("--out", cb_out)->required();
  codebook->callback([&] {
    run = [&] {
      const auto videos = with_stage("input", [&] { return csv::read_descriptor_dir(cb_in); });
      const auto cb = with_stage("codebook", [&] {
        return encoding::build_codebook(videos, cb_size, cb_sample, cb_seed);
      });
      io::write_file(cb_out, io::encode(cb));
      std::cout << "codebook: " << cb.size() << " x " << cb.dim() << " from " << videos.size() << " videos\n";
    };
  });

  // encode
  std::string en_codebook, en_in, en_out, en_labels, en_pool = "max";
  Index en_bases = encoding::kDefaultLlcBases;
  double en_reg = encoding::kDefaultLlcReg;
  auto* encode = app.add_subcommand("encode", "LLC-encode and pool each video's descriptors");
  encode->add_option("--codebook", en_codebook)->required();
  encode->add_option("--in", en_in, "Directory of descriptor CSV files")->required();
  encode->add_option("--bases", en_bases, "Nearest codewords per descriptor");
  encode->add_option("--reg", en_reg, "Locality regularizer");
  encode->add_option("--pool", en_pool, "max, sum or mean");
  encode->add_option("--labels", en_labels, "CSV of video_id,label (videos not listed are unlabeled)");
  encode->add_option("--out", en_out)->required();
  encode->callback([&] {
    run = [&] {
      const auto cb = io::decode_codebook(io::read_file(en_codebook));
      const auto pooling = encoding::parse_pooling(en_pool);
      const auto videos = with_stage("input", [&] { return csv::read_descriptor_dir(en_in); });
      std::map<std::string, int> labels;
      if (!en_labels.empty()) labels = read_video_labels(en_labels);
      FeatureSet out{Matrix(static_cast<Index>(videos.size()), cb.size()), {}};
      with_stage("encode", [&] {
        for (std::size_t i = 0; i < videos.size(); ++i) {
          const Matrix codes = encoding::llc_encode(videos[i], cb, en_bases, en_reg);
          out.features.row(static_cast<Index>(i)) = encoding::pool_codes(codes, pooling).transpose();
          const auto it = labels.find(videos[i].video_id);
          out.labels.push_back(it == labels.end() ? kUnlabeled : it->second);
        }
      });
      csv::write_features(en_out, out);
    };
  });

  // pca-fit
  std::string pc_in, pc_out, pc_reduced;
  double pc_retain = 0.99;
  auto* pca_fit = app.add_subcommand("pca-fit", "Fit PCA keeping more than a variance fraction");
  pca_fit->add_option("--in", pc_in)->required();
  pca_fit->add_option("--retain", pc_retain);
  pca_fit->add_option("--out", pc_out)->required();
  pca_fit->add_option("--reduced", pc_reduced, "Also write the projected features");
  pca_fit->callback([&] {
    run = [&] {
      const auto set = csv::read_features(pc_in);
      const auto model = with_stage("pca", [&] { return encoding::pca_fit(set.features, pc_retain); });
      io::write_file(pc_out, io::encode(model));
      if (!pc_reduced.empty()) {
        csv::write_features(pc_reduced, FeatureSet{encoding::pca_project(model, set.features), set.labels});
      }
      std::cout << "pca: " << model.input_dim() << " -> " << model.output_dim() << " dims\n";
    };
  });

  // align-fit
  std::string af_source, af_target, af_out, af_dump, af_kernel = "rbf";
  kema::KemaConfig af_config;
  bool af_mutual = false;
  std::uint64_t af_seed = 0;
  auto* align_fit = app.add_subcommand("align-fit", "Fit the kernel manifold alignment");
  align_fit->add_option("--source", af_source)->required();
  align_fit->add_option("--target", af_target)->required();
  align_fit->add_option("--mu", af_config.mu, "Topology weight");
  align_fit->add_option("--latent", af_config.latent_dim, "Latent dimension");
  align_fit->add_option("--knn", af_config.knn_k);
  align_fit->add_option("--ridge", af_config.ridge, "Ridge as a fraction of trace(B)/size");
  align_fit->add_option("--kernel", af_kernel, "rbf or linear");
  align_fit->add_flag("--mutual-knn", af_mutual, "Keep only mutual nearest-neighbor edges");
  align_fit->add_option("--seed", af_seed, "Accepted for symmetry; the fit is deterministic");
  align_fit->add_option("--dump-laplacians", af_dump, "Write topology/similarity/dissimilarity CSVs here");
  align_fit->add_option("--out", af_out)->required();
  align_fit->callback([&] {
    run = [&] {
      af_config.kernel = spectral::parse_kernel_kind(af_kernel);
      if (af_mutual) af_config.knn_symmetrization = spectral::KnnSymmetrization::mutual;
      const auto src = csv::read_features(af_source);
      const auto tgt = csv::read_features(af_target);
      int classes = 0;
      for (const auto* s : {&src, &tgt}) {
        for (int l : s->labels) classes = std::max(classes, l + 1);
      }
      const DomainBundle bundle{{src, tgt}, classes};
      if (!af_dump.empty()) {
        const auto problem = with_stage("kema", [&] { return kema::build_problem(bundle, af_config); });
        std::filesystem::create_directories(af_dump);
        write_matrix_csv(af_dump + "/topology.csv", problem.laplacians.topology);
        write_matrix_csv(af_dump + "/similarity.csv", problem.laplacians.similarity);
        write_matrix_csv(af_dump + "/dissimilarity.csv", problem.laplacians.dissimilarity);
      }
      const auto model = with_stage("kema", [&] { return kema::kema_fit(bundle, af_config); });
      io::write_file(af_out, io::encode(model));
      std::cout << "alignment: latent dimension " << model.latent_dim() << "\n";
    };
  });

  // align-project
  std::string ap_model, ap_domain, ap_in, ap_out;
  auto* align_project = app.add_subcommand("align-project", "Project samples into the latent space");
  align_project->add_option("--model", ap_model)->required();
  align_project->add_option("--domain", ap_domain, "source or target")->required();
  align_project->add_option("--in", ap_in)->required();
  align_project->add_option("--out", ap_out)->required();
  align_project->callback([&] {
    run = [&] {
      const auto model = io::decode_alignment(io::read_file(ap_model));
      const auto set = csv::read_features(ap_in);
      const Matrix latent = with_stage("kema", [&] {
        return kema::kema_project(model, domain_index(ap_domain), set.features);
      });
      csv::write_features(ap_out, FeatureSet{latent, set.labels});
    };
  });

  // age-train
  std::string ag_source, ag_target, ag_out, ag_loss, ag_init;
  age::TrainConfig ag_config;
  auto* age_train = app.add_subcommand("age-train", "Train the source and target encoders");
  age_train->add_option("--source-aligned", ag_source)->required();
  age_train->add_option("--target-aligned", ag_target)->required();
  age_train->add_option("--iters", ag_config.iterations);
  age_train->add_option("--lr", ag_config.learning_rate);
  age_train->add_option("--momentum", ag_config.momentum);
  age_train->add_option("--hidden", ag_config.hidden_dim, "Hidden width (0 = input width)");
  age_train->add_option("--init", ag_init, "unit_uniform or scaled_uniform");
  age_train->add_option("--batch", ag_config.batch_size, "Mini-batch size (0 = full batch)");
  age_train->add_option("--seed", ag_config.seed);
  age_train->add_option("--loss-log", ag_loss, "CSV of encoder,iteration,loss");
  age_train->add_option("--out", ag_out)->required();
  age_train->callback([&] {
    run = [&] {
      if (!ag_init.empty()) ag_config.init = age::parse_init_scheme(ag_init);
      const auto src = csv::read_features(ag_source);
      const auto tgt = csv::read_features(ag_target);
      if (src.dim() != tgt.dim()) throw Error(ErrorCode::DimensionMismatch, "aligned widths differ", "input");
      int classes = 0;
      for (const auto* s : {&src, &tgt}) {
        for (int l : s->labels) classes = std::max(classes, l + 1);
      }
      io::AgeBundle bundle;
      Matrix pooled(src.size() + tgt.size(), src.dim());
      pooled << src.features, tgt.features;
      bundle.scaler = age::RangeScaler::fit(pooled);
      bundle.targets = with_stage("age", [&] { return age::class_targets(src, tgt, bundle.scaler, classes); });
      auto pair = with_stage("age", [&] {
        return age::age_train(FeatureSet{bundle.scaler.transform(src.features), src.labels},
                              FeatureSet{bundle.scaler.transform(tgt.features), tgt.labels},
                              bundle.targets, ag_config);
      });
      bundle.source = pair.source.model;
      bundle.target = pair.target.model;
      io::write_file(ag_out, io::encode(bundle));
      if (!ag_loss.empty()) write_loss_log(ag_loss, pair.source.loss_curve, pair.target.loss_curve);
      std::cout << "encoders: final loss source " << pair.source.final_loss << " target "
                << pair.target.final_loss << "\n";
    };
  });

  // svm-train
  std::string sv_in, sv_out, sv_c, sv_gamma;
  int sv_folds = 5;
  double sv_tol = 1e-3;
  std::uint64_t sv_seed = 0;
  auto* svm_train = app.add_subcommand("svm-train", "Grid-search and train a one-vs-one RBF SVM");
  svm_train->add_option("--in", sv_in)->required();
  svm_train->add_option("--cv", sv_folds, "Cross-validation folds");
  svm_train->add_option("--c-grid", sv_c, "Comma-separated C values");
  svm_train->add_option("--gamma-grid", sv_gamma, "Comma-separated gamma values");
  svm_train->add_option("--tol", sv_tol);
  svm_train->add_option("--seed", sv_seed, "Fold assignment seed");
  svm_train->add_option("--out", sv_out)->required();
  svm_train->callback([&] {
    run = [&] {
      const auto set = csv::read_features(sv_in).labeled_only();
      const auto cs = sv_c.empty() ? svm::default_c_grid() : parse_grid(sv_c, "--c-grid");
      const auto gs = sv_gamma.empty() ? svm::default_gamma_grid() : parse_grid(sv_gamma, "--gamma-grid");
      const auto model = with_stage("svm", [&] {
        const auto grid = svm::grid_search_cv(set, cs, gs, sv_folds, sv_seed, sv_tol);
        std::cout << "svm: C " << grid.best.c << " gamma " << grid.best.gamma << " cv accuracy "
                  << grid.best_accuracy << "\n";
        return svm::svm_train(set, grid.best);
      });
      io::write_file(sv_out, io::encode(model));
    };
  });

  // predict
  std::string pr_pipeline, pr_svm, pr_in, pr_out;
  auto* predict = app.add_subcommand("predict", "Predict labels with a pipeline or a bare SVM");
  auto* pr_pipe_opt = predict->add_option("--pipeline", pr_pipeline, "Apply the full target chain to raw features");
  predict->add_option("--svm", pr_svm, "Classify features as given")->excludes(pr_pipe_opt);
  predict->add_option("--in", pr_in)->required();
  predict->add_option("--out", pr_out)->required();
  predict->callback([&] {
    run = [&] {
      const auto set = csv::read_features(pr_in);
      Labels predictions;
      if (!pr_pipeline.empty()) {
        const auto model = pipeline::load_model(pr_pipeline);
        predictions = pipeline::test_pipeline(model, FeatureSet{set.features, Labels(set.labels.size(), kUnlabeled)})
                          .predictions;
      } else if (!pr_svm.empty()) {
        const auto model = io::decode_svm(io::read_file(pr_svm));
        predictions = with_stage("svm", [&] { return svm::svm_predict(model, set.features); });
      } else {
        throw Error(ErrorCode::BadConfig, "one of --pipeline or --svm is required");
      }
      write_predictions(pr_out, predictions);
    };
  });

  // train
  std::string tr_source, tr_target, tr_config, tr_out, tr_loss;
  std::optional<std::uint64_t> tr_seed;
  auto* train = app.add_subcommand("train", "Train the whole pipeline");
  train->add_option("--source", tr_source)->required();
  train->add_option("--target", tr_target)->required();
  train->add_option("--config", tr_config, "key = value configuration file");
  train->add_option("--seed", tr_seed, "Overrides the configured seed");
  train->add_option("--loss-log", tr_loss, "CSV of encoder,iteration,loss");
  train->add_option("--out", tr_out)->required();
  train->callback([&] {
    run = [&] {
      auto config = tr_config.empty() ? pipeline::PipelineConfig{}
                                      : with_stage("config", [&] { return pipeline::load_config(tr_config); });
      if (tr_seed) config.seed = *tr_seed;
      const auto src = csv::read_features(tr_source);
      const auto tgt = csv::read_features(tr_target);
      pipeline::TrainingTrace trace;
      const auto model = pipeline::train_pipeline(src, tgt, config, &trace);
      pipeline::save_model(model, tr_out);
      if (!tr_loss.empty()) write_loss_log(tr_loss, trace.source_loss, trace.target_loss);
      std::cout << "trained: latent " << model.alignment.latent_dim() << ", svm C " << model.svm.c
                << " gamma " << model.svm.gamma << " (cv " << trace.grid.best_accuracy << ")\n";
    };
  });

  // test
  std::string te_pipeline, te_in, te_report, te_predictions;
  bool te_truth = false;
  auto* test = app.add_subcommand("test", "Classify target samples with a trained pipeline");
  test->add_option("--pipeline", te_pipeline)->required();
  test->add_option("--in", te_in)->required();
  test->add_flag("--truth", te_truth, "Score against the labels in the input file");
  test->add_option("--report", te_report, "Per-class precision and confusion CSV");
  test->add_option("--predictions", te_predictions, "CSV of row,predicted_label");
  test->callback([&] {
    run = [&] {
      const auto model = pipeline::load_model(te_pipeline);
      auto set = csv::read_features(te_in);
      if (!te_truth) std::fill(set.labels.begin(), set.labels.end(), kUnlabeled);
      const auto out = pipeline::test_pipeline(model, set);
      if (!te_predictions.empty()) write_predictions(te_predictions, out.predictions);
      if (te_truth && !out.report) {
        throw Error(ErrorCode::InsufficientLabels, "--truth needs every row labeled", "input");
      }
      if (out.report) {
        std::cout << "average precision: " << out.report->average_precision << "\n";
        if (!te_report.empty()) write_eval_report(te_report, *out.report);
      } else if (te_predictions.empty()) {
        for (std::size_t i = 0; i < out.predictions.size(); ++i) std::cout << i << "," << out.predictions[i] << "\n";
      }
    };
  });

  // bench-synth
  std::string bs_spec, bs_config, bs_methods = "na,kema,cdfag", bs_out, bs_latent, bs_mu, bs_tt;
  int bs_seeds = 5;
  synth::Splits bs_splits;
  auto* bench = app.add_subcommand("bench-synth", "Compare methods on synthetic two-domain data");
  bench->add_option("--spec", bs_spec, "key = value generator spec (defaults when omitted)");
  bench->add_option("--config", bs_config, "Pipeline configuration");
  bench->add_option("--methods", bs_methods, "Comma-separated subset of na,kema,cdfag");
  bench->add_option("--seeds", bs_seeds, "Runs per setting, seeds spec.seed onward");
  bench->add_option("--source-train", bs_splits.source_train, "Labeled source rows per class");
  bench->add_option("--target-train", bs_splits.target_train, "Labeled target rows per class");
  bench->add_option("--target-test", bs_splits.target_test, "Held-out target rows per class");
  auto* latent_opt = bench->add_option("--latent-sweep", bs_latent, "Comma-separated latent dimensions; writes n,ap");
  auto* mu_opt = bench->add_option("--mu-sweep", bs_mu, "Comma-separated mu values; writes mu,ap")->excludes(latent_opt);
  bench->add_option("--target-train-sweep", bs_tt, "Comma-separated labeled target counts; writes T_train,ap")
      ->excludes(latent_opt)
      ->excludes(mu_opt);
  bench->add_option("--out", bs_out)->required();
  bench->callback([&] {
    run = [&] {
      const auto spec = bs_spec.empty() ? synth::SynthSpec{} : synth::load_spec(bs_spec);
      const auto config = bs_config.empty() ? pipeline::PipelineConfig{}
                                            : with_stage("config", [&] { return pipeline::load_config(bs_config); });
      auto out = open_out(bs_out);
      auto sweep_out = [&](const std::string& key, const std::vector<synth::SweepPoint>& points) {
        synth::write_sweep(out, key, points);
        for (const auto& p : points) {
          std::cout << key << " " << p.value << ": " << 100 * p.summary.mean_ap << " +- "
                    << 100 * p.summary.std_ap << "\n";
        }
      };
      auto counts = [](const std::string& text, const std::string& what) {
        std::vector<Index> v;
        for (double x : parse_grid(text, what)) v.push_back(static_cast<Index>(x));
        return v;
      };
      if (!bs_latent.empty()) {
        sweep_out("n", synth::latent_sweep(spec, bs_splits, config, counts(bs_latent, "--latent-sweep"), bs_seeds));
      } else if (!bs_mu.empty()) {
        sweep_out("mu", synth::mu_sweep(spec, bs_splits, config, parse_grid(bs_mu, "--mu-sweep"), bs_seeds));
      } else if (!bs_tt.empty()) {
        sweep_out("T_train", synth::target_train_sweep(spec, bs_splits, config,
                                                       counts(bs_tt, "--target-train-sweep"), bs_seeds));
      } else {
        std::vector<EvalReport> all;
        for (auto method : synth::parse_methods(bs_methods)) {
          auto summary = synth::repeat_protocol(spec, method, bs_splits, config, bs_seeds);
          std::cout << synth::to_string(method) << ": " << 100 * summary.mean_ap << " +- "
                    << 100 * summary.std_ap << "\n";
          all.insert(all.end(), summary.runs.begin(), summary.runs.end());
        }
        synth::write_report(out, all, spec.class_count);
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    run();
  } catch (const Error& e) {
    std::cerr << "error";
    if (!e.stage().empty()) std::cerr << " [" << e.stage() << "]";
    std::cerr << " " << to_string(e.code()) << ": " << e.detail() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
