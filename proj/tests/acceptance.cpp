// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "cdfag/csv.hpp"
#include "cdfag/encoding.hpp"
#include "cdfag/error.hpp"
#include "cdfag/graph_spectral.hpp"
#include "cdfag/kema.hpp"
#include "cdfag/pipeline.hpp"
#include "cdfag/svm.hpp"
#include "cdfag/synth.hpp"
#include "oracles.hpp"

using namespace cdfag;
namespace fs = std::filesystem;

namespace {

constexpr int kSeeds = 5;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double pct(double ap) { return 100.0 * ap; }

Vector labels_to_signs(const Labels& labels, int positive) {
  Vector y(static_cast<Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Index>(i)) = labels[i] == positive ? 1.0 : -1.0;
  return y;
}

/// Rows of classes 0 and 1 from the source domain of the default generator,
/// at most `per` of each.
FeatureSet two_class_sample(std::uint64_t seed, Index per) {
  synth::SynthSpec spec;
  spec.seed = seed;
  const DomainBundle bundle = synth::generate(spec);
  const FeatureSet& src = bundle.domains[0];
  std::vector<Index> rows;
  Index n0 = 0, n1 = 0;
  for (Index i = 0; i < src.size(); ++i) {
    const int l = src.labels[static_cast<std::size_t>(i)];
    if (l == 0 && n0 < per) rows.push_back(i), ++n0;
    if (l == 1 && n1 < per) rows.push_back(i), ++n1;
  }
  return src.subset(rows);
}

double independent_residual(const Matrix& a, const Matrix& b, double ridge, double lambda, const Vector& v) {
  return (a * v - lambda * (b * v + ridge * v)).norm();
}

Outcome criterion1() {
  Outcome o;
  const std::string readme = slurp(CDFAG_README);
  o.require(!readme.empty(), "README.md readable");
  for (const char* needle : {"InfAR", "XD145", "not reproduced"}) {
    o.require(readme.find(needle) != std::string::npos, std::string("README mentions '") + needle + "'");
  }
  o.detail << "README states that the InfAR/XD145 real-dataset accuracies are not reproduced";
  return o;
}

struct BenchResults {
  double na = 0, kema = 0, cdfag = 0, seconds = 0;
};

Outcome criterion2(BenchResults& r) {
  Outcome o;
  const synth::SynthSpec spec;
  const synth::Splits splits;
  const pipeline::PipelineConfig config;
  const auto start = std::chrono::steady_clock::now();
  r.na = pct(synth::repeat_protocol(spec, synth::Method::na, splits, config, kSeeds).mean_ap);
  r.kema = pct(synth::repeat_protocol(spec, synth::Method::kema, splits, config, kSeeds).mean_ap);
  r.cdfag = pct(synth::repeat_protocol(spec, synth::Method::cdfag, splits, config, kSeeds).mean_ap);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(r.cdfag > r.kema, "CDFAG > KEMA");
  o.require(r.kema > r.na, "KEMA > NA");
  o.require(r.cdfag - r.na >= 10.0, "CDFAG - NA >= 10");
  o.require(r.seconds < 300.0, "runtime < 300 s");
  o.detail << "AP over " << kSeeds << " seeds: NA " << r.na << ", KEMA " << r.kema << ", CDFAG " << r.cdfag
           << " (gap " << r.cdfag - r.na << "), " << r.seconds << " s";
  return o;
}

Outcome criterion3() {
  Outcome o;
  const std::vector<double> mus{0.0, 0.1, 0.2, 0.3, 0.4, 1.0};
  const auto points = synth::mu_sweep({}, {}, {}, mus, kSeeds);
  std::vector<double> ap;
  for (const auto& p : points) ap.push_back(pct(p.summary.mean_ap));
  o.require(ap[1] > ap[0], "AP(0.1) > AP(0)");
  o.require(ap[1] > ap[5], "AP(0.1) > AP(1)");
  const auto [lo, hi] = std::minmax_element(ap.begin() + 1, ap.begin() + 5);
  o.require(*hi - *lo < 5.0, "spread over mu in {0.1..0.4} < 5");
  o.detail << "AP by mu:";
  for (std::size_t i = 0; i < mus.size(); ++i) o.detail << " " << mus[i] << "->" << ap[i];
  o.detail << "; spread on {0.1..0.4} " << *hi - *lo;
  return o;
}

Outcome criterion4() {
  Outcome o;
  const std::vector<Index> dims{10, 25, 50, 100, 200};
  const auto points = synth::latent_sweep({}, {}, {}, dims, kSeeds);
  std::vector<double> ap;
  for (const auto& p : points) ap.push_back(pct(p.summary.mean_ap));
  const double interior = *std::max_element(ap.begin() + 1, ap.end() - 1);
  o.require(interior > ap.front() && interior > ap.back(), "interior maximum strictly above both ends");
  o.detail << "AP by n:";
  for (std::size_t i = 0; i < dims.size(); ++i) o.detail << " " << dims[i] << "->" << ap[i];
  return o;
}

Outcome criterion5() {
  Outcome o;
  Rng rng(2024);

  // (a) residual bound on random pencils and on an assembled alignment pencil
  double worst_a = 0.0;
  auto residual_ratio = [&](const Matrix& a, const Matrix& b, const spectral::GevdResult& r) {
    for (Index j = 0; j < r.eigenvalues.size(); ++j) {
      const double lam = r.eigenvalues(j);
      const double res = independent_residual(a, b, r.ridge, lam, r.eigenvectors.col(j));
      worst_a = std::max(worst_a, res / (1e-6 * (a.norm() + std::abs(lam) * b.norm())));
    }
  };
  for (int t = 0; t < 10; ++t) {
    const Matrix a = oracle::random_symmetric(30, rng);
    const Matrix b = oracle::random_spd(30, rng);
    residual_ratio(a, b, spectral::solve_gevd(a, b, 30, 1e-6));
  }
  {
    synth::SynthSpec spec;
    const DomainBundle bundle = synth::generate(spec);
    const synth::SplitData split = synth::split_bundle(bundle, {}, 1);
    const kema::KemaProblem p = kema::build_problem({{split.source, split.target}, 4}, kema::KemaConfig{});
    residual_ratio(p.lhs, p.rhs, spectral::solve_gevd(p.lhs, p.rhs, 100, p.ridge));
  }
  o.require(worst_a <= 1.0, "(a) GEVD residual");

  // (b) eigenvalues against the whitened dense oracle
  double worst_b = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Matrix a = oracle::random_symmetric(8, rng);
    const Matrix b = oracle::random_spd(8, rng);
    const double ridge = t % 2 ? 1e-6 : 0.0;
    const auto r = spectral::solve_gevd(a, b, 8, ridge);
    worst_b = std::max(worst_b, (r.eigenvalues - oracle::whitened_eigenvalues(a, b, ridge)).cwiseAbs().maxCoeff());
  }
  o.require(worst_b <= 1e-8, "(b) GEVD whitening oracle");

  // (c) encoder gradients against central differences
  double worst_c = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const age::AgeModel m = age::initialize(6, 5, age::InitScheme::scaled_uniform, seed);
    const Matrix x = (0.1 + 0.8 * oracle::random_matrix(9, 6, rng).cwiseAbs().cwiseMin(1.0).array()).matrix();
    const Matrix t = (0.1 + 0.8 * oracle::random_matrix(9, 6, rng).cwiseAbs().cwiseMin(1.0).array()).matrix();
    worst_c = std::max(worst_c, oracle::gradient_check(m, x, t, age::loss_gradient(m, x, t)));
  }
  o.require(worst_c <= 1e-4, "(c) AGE gradient");

  // (d) SMO against projected-gradient ascent at N = 40
  double worst_d = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const FeatureSet s = two_class_sample(seed, 20);
    const Vector y = labels_to_signs(s.labels, 0);
    const Matrix k = spectral::gram(s.features, s.features, spectral::KernelSpec::rbf(spectral::median_bandwidth(s.features)));
    for (double c : {0.5, 4.0}) {
      const auto sol = svm::solve_binary(k, y, c, 1e-3, 1000000);
      o.require(sol.converged, "(d) SMO converged");
      const double ref = oracle::svm_dual_optimum(k, y, c);
      worst_d = std::max(worst_d, std::abs(svm::dual_objective(k, y, sol.alpha) - ref) / std::abs(ref));
    }
  }
  o.require(worst_d <= 1e-4, "(d) SMO dual objective");

  // (e) LLC against the dense constrained least squares
  double worst_e = 0.0;
  {
    const Matrix bases = oracle::random_matrix(16, 4, rng);
    const Matrix desc = oracle::random_matrix(40, 4, rng);
    const Index kb = encoding::kDefaultLlcBases;
    const Matrix codes = encoding::llc_encode({"v", desc}, encoding::Codebook{bases}, kb, encoding::kDefaultLlcReg);
    for (Index i = 0; i < desc.rows(); ++i) {
      std::vector<std::pair<double, Index>> order;
      for (Index j = 0; j < bases.rows(); ++j) order.emplace_back((bases.row(j) - desc.row(i)).squaredNorm(), j);
      std::sort(order.begin(), order.end());
      Matrix local(kb, 4);
      for (Index t = 0; t < kb; ++t) local.row(t) = bases.row(order[static_cast<std::size_t>(t)].second);
      const Vector w = oracle::llc_weights(local, desc.row(i).transpose(), encoding::kDefaultLlcReg);
      Vector expected = Vector::Zero(bases.rows());
      for (Index t = 0; t < kb; ++t) expected(order[static_cast<std::size_t>(t)].second) = w(t);
      worst_e = std::max(worst_e, (codes.row(i).transpose() - expected).cwiseAbs().maxCoeff());
    }
  }
  o.require(worst_e <= 1e-8, "(e) LLC codes");

  // (f) PCA against the dense covariance eigendecomposition
  double worst_f = 0.0;
  {
    Matrix x = oracle::random_matrix(80, 6, rng);
    for (Index j = 0; j < 6; ++j) x.col(j) *= static_cast<double>(6 - j);
    const encoding::PcaModel m = encoding::pca_fit(x, 1.0);
    const auto [vals, vecs] = oracle::covariance_eigen(x);
    const Index p = m.output_dim();
    o.require(p == 6, "(f) full PCA keeps every component");
    worst_f = std::max((m.eigenvalues - vals.head(p)).cwiseAbs().maxCoeff(),
                       (m.components - vecs.leftCols(p).transpose()).cwiseAbs().maxCoeff());
  }
  o.require(worst_f <= 1e-8, "(f) PCA eigenpairs");

  o.detail << "(a) worst residual / bound " << worst_a << "; (b) " << worst_b << "; (c) " << worst_c << "; (d) "
           << worst_d << "; (e) " << worst_e << "; (f) " << worst_f;
  return o;
}

Outcome criterion6() {
  Outcome o;
  synth::SynthSpec spec;
  const synth::SplitData split = synth::split_bundle(synth::generate(spec), {}, 1);

  // Laplacians of the assembled alignment problem
  const kema::KemaProblem p = kema::build_problem({{split.source, split.target}, 4}, kema::KemaConfig{});
  double row_sum = 0.0;
  for (const Matrix* l : {&p.laplacians.topology, &p.laplacians.similarity, &p.laplacians.dissimilarity}) {
    row_sum = std::max(row_sum, l->rowwise().sum().cwiseAbs().maxCoeff());
  }
  o.require(row_sum <= 1e-8, "Laplacian zero row sums");
  const double min_lt = oracle::min_eigenvalue(p.laplacians.topology);
  const double min_ls = oracle::min_eigenvalue(p.laplacians.similarity);
  o.require(min_lt >= -1e-10 * std::max(1.0, p.laplacians.topology.norm()), "L_t PSD");
  o.require(min_ls >= -1e-10 * std::max(1.0, p.laplacians.similarity.norm()), "L_s PSD");

  // RBF Gram
  const Matrix& xs = split.source.features;
  const Matrix g = spectral::gram(xs, xs, spectral::KernelSpec::rbf(spectral::median_bandwidth(xs)));
  const double min_gram = oracle::min_eigenvalue(g);
  o.require(min_gram >= -1e-10 * static_cast<double>(g.rows()), "RBF Gram PSD");

  // LLC codes sum to one
  Rng rng(6);
  const Matrix codes = encoding::llc_encode({"v", oracle::random_matrix(50, 3, rng)},
                                            encoding::Codebook{oracle::random_matrix(20, 3, rng)});
  const double llc_sum = (codes.rowwise().sum().array() - 1.0).abs().maxCoeff();
  o.require(llc_sum <= 1e-10, "LLC codes sum to one");

  // KKT at the default tolerance
  double kkt = 0.0;
  const double tol = 1e-3;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const FeatureSet s = two_class_sample(seed, 30);
    const Vector y = labels_to_signs(s.labels, 0);
    const Matrix k = spectral::gram(s.features, s.features, spectral::KernelSpec::rbf(spectral::median_bandwidth(s.features)));
    for (double c : {0.1, 1.0, 10.0}) {
      const auto sol = svm::solve_binary(k, y, c, tol, 1000000);
      o.require(sol.converged, "SMO converged");
      const Vector f = k * sol.alpha.cwiseProduct(y) + Vector::Constant(y.size(), sol.bias);
      for (Index i = 0; i < y.size(); ++i) {
        const double m = y(i) * f(i);
        double v = 0.0;
        if (sol.alpha(i) <= 0.0) v = std::max(0.0, 1.0 - m);
        else if (sol.alpha(i) >= c) v = std::max(0.0, m - 1.0);
        else v = std::abs(m - 1.0);
        kkt = std::max(kkt, v);
      }
    }
  }
  o.require(kkt <= tol, "SVM KKT within 1e-3");

  // Generalized features in (0, 1) and within-class contraction, 5 seeds
  int contracted = 0;
  bool open_unit = true;
  std::ostringstream ratios;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    spec.seed = seed;
    const synth::SplitData sd = synth::split_bundle(synth::generate(spec), {}, seed);
    pipeline::PipelineConfig config;
    config.seed = seed;
    pipeline::TrainingTrace trace;
    const pipeline::PipelineModel model = pipeline::train_pipeline(sd.source, sd.target, config, &trace);
    const Matrix test = pipeline::target_features(model, sd.target_test.features);
    for (const Matrix* m : std::initializer_list<const Matrix*>{&trace.source_features, &trace.target_features, &test}) {
      open_unit = open_unit && m->minCoeff() > 0.0 && m->maxCoeff() < 1.0;
    }
    const double before = age::within_class_variance(model.scaler.transform(trace.source_aligned), sd.source.labels) +
                          age::within_class_variance(model.scaler.transform(trace.target_aligned), sd.target.labels);
    const double after = age::within_class_variance(trace.source_features, sd.source.labels) +
                         age::within_class_variance(trace.target_features, sd.target.labels);
    if (after <= before) ++contracted;
    ratios << (seed > 1 ? "," : "") << after / before;
  }
  o.require(open_unit, "generalized features in (0,1)");
  o.require(contracted == kSeeds, "within-class variance contraction on every seed");

  o.detail << "max |row sum| " << row_sum << "; min eig L_t " << min_lt << ", L_s " << min_ls << ", Gram " << min_gram
           << "; LLC sum error " << llc_sum << "; max KKT violation " << kkt << "; contraction " << contracted << "/"
           << kSeeds << " (after/before " << ratios.str() << ")";
  return o;
}

Outcome criterion7() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "cdfag_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const synth::SplitData sd = synth::split_bundle(synth::generate({}), {}, 1);
  csv::write_features((dir / "source.csv").string(), sd.source);
  csv::write_features((dir / "target.csv").string(), sd.target);

  auto train = [&](const std::string& out) {
    const std::string cmd = std::string("\"") + CDFAG_CLI + "\" train --source \"" + (dir / "source.csv").string() +
                            "\" --target \"" + (dir / "target.csv").string() + "\" --seed 7 --out \"" +
                            (dir / out).string() + "\" > \"" + (dir / (out + ".log")).string() + "\" 2>&1";
    return std::system(cmd.c_str());
  };
  o.require(train("a.model") == 0, "first cdfag train run");
  o.require(train("b.model") == 0, "second cdfag train run");
  const std::string a = slurp(dir / "a.model");
  const std::string b = slurp(dir / "b.model");
  o.require(!a.empty() && a == b, "identical-seed runs byte-identical");

  std::string resaved;
  try {
    const pipeline::PipelineModel m = pipeline::load_model((dir / "a.model").string());
    pipeline::save_model(m, (dir / "c.model").string());
    resaved = slurp(dir / "c.model");
  } catch (const Error& e) {
    o.require(false, std::string("load/save: ") + e.what());
  }
  o.require(resaved == a, "save/load round trip byte-identical");
  o.detail << "pipeline file " << a.size() << " bytes; runs equal " << (a == b) << ", reload equal " << (resaved == a);
  fs::remove_all(dir);
  return o;
}

Outcome criterion8() {
  Outcome o;
  // covariance diag(99, 1): 99% exactly is not strictly more than 99%
  const double s = std::sqrt(198.0), t = std::sqrt(2.0);
  Matrix x(4, 2);
  x << s, 0, -s, 0, 0, t, 0, -t;
  const Index p = encoding::pca_fit(x, 0.99).output_dim();
  o.require(p == 2, "PCA (99, 1) keeps 2");

  // centre of a square: four exact ties, the lower indices win
  Matrix sq(5, 2);
  sq << 0, 0, 1, 0, 0, 1, -1, 0, 0, -1;
  const Matrix w = spectral::knn_topology_weights(sq, 2, spectral::KnnSymmetrization::mutual);
  const bool knn_ok = w(0, 1) > 0 && w(0, 2) > 0 && w(0, 3) == 0 && w(0, 4) == 0 &&
                      w == spectral::knn_topology_weights(sq, 2, spectral::KnnSymmetrization::mutual);
  o.require(knn_ok, "kNN tie-break");
  Vector centre(2);
  centre << 0.5, 0.5;
  Matrix corners(4, 2);
  corners << 0, 0, 1, 0, 0, 1, 1, 1;
  const bool bases_ok = encoding::nearest_bases(encoding::Codebook{corners}, centre, 4) == std::vector<Index>{0, 1, 2, 3};
  o.require(bases_ok, "nearest-codeword tie-break");

  // cyclic one-vs-one votes: one each
  svm::SvmModel m;
  m.dim = 1;
  auto machine = [](int a, int b, double bias) { return svm::BinaryMachine{a, b, Matrix(0, 1), Vector(0), bias}; };
  m.classes = {2, 4, 7};
  m.machines = {machine(2, 4, 1.0), machine(2, 7, -1.0), machine(4, 7, 1.0)};
  const Labels vote = svm::svm_predict(m, Matrix::Zero(1, 1));
  o.require(vote == Labels{2}, "vote tie goes to the lowest id");

  o.detail << "PCA p = " << p << "; kNN ties " << (knn_ok && bases_ok ? "lower index" : "wrong") << "; vote tie -> "
           << vote.front();
  return o;
}

}  // namespace

int main() {
  std::cout.setf(std::ios::fixed);
  std::cout.precision(3);
  BenchResults bench;
  const std::vector<std::function<Outcome()>> criteria{
      criterion1, [&] { return criterion2(bench); }, criterion3, criterion4,
      criterion5, criterion6, criterion7, criterion8};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "threw: " << e.what();
    }
    if (!o.pass) ++failed;
    std::cout << "criterion " << i + 1 << " [PRIMARY] " << (o.pass ? "PASS" : "FAIL") << ": " << o.detail.str()
              << std::endl;
  }
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
