#include "cdfag/persist.hpp"

#include "cdfag/error.hpp"

namespace cdfag::io {

namespace {

void write_kernel(Writer& w, const spectral::KernelSpec& k) {
  w.u32(k.kind == spectral::KernelKind::rbf ? 0 : 1);
  w.f64(k.bandwidth);
}

spectral::KernelSpec read_kernel(Reader& r) {
  const auto kind = r.u32();
  if (kind > 1) throw Error(ErrorCode::CorruptModel, "unknown kernel kind");
  spectral::KernelSpec k;
  k.kind = kind == 0 ? spectral::KernelKind::rbf : spectral::KernelKind::linear;
  k.bandwidth = r.f64();
  return k;
}

void write_counts(Writer& w, const std::vector<Index>& v) {
  w.u64(v.size());
  for (Index x : v) w.i64(x);
}

std::vector<Index> read_counts(Reader& r) {
  const auto n = r.u64();
  if (n > (1u << 24)) throw Error(ErrorCode::CorruptModel, "count list too long");
  std::vector<Index> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = static_cast<Index>(r.i64());
  return v;
}

template <typename T>
std::string wrap(std::string_view kind, std::string_view tag, const T& m) {
  Writer body, sec;
  write(sec, m);
  body.section(tag, sec);
  return encode_file(kind, body);
}

}  // namespace

void write(Writer& w, const encoding::Codebook& m) { w.matrix(m.bases); }

encoding::Codebook read_codebook(Reader& r) { return {r.matrix()}; }

void write(Writer& w, const encoding::PcaModel& m) {
  w.vector(m.mean);
  w.matrix(m.components);
  w.vector(m.eigenvalues);
  w.f64(m.retained_fraction);
  w.f64(m.total_variance);
}

encoding::PcaModel read_pca(Reader& r) {
  encoding::PcaModel m;
  m.mean = r.vector();
  m.components = r.matrix();
  m.eigenvalues = r.vector();
  m.retained_fraction = r.f64();
  m.total_variance = r.f64();
  if (m.components.cols() != m.mean.size() || m.components.rows() != m.eigenvalues.size()) {
    throw Error(ErrorCode::CorruptModel, "inconsistent PCA shapes");
  }
  return m;
}

void write(Writer& w, const kema::AlignmentModel& m) {
  Writer cfg;
  cfg.f64(m.config.mu);
  cfg.i64(m.config.latent_dim);
  cfg.i64(m.config.knn_k);
  cfg.f64(m.config.ridge);
  cfg.u32(m.config.kernel == spectral::KernelKind::rbf ? 0 : 1);
  cfg.u32(m.config.knn_symmetrization == spectral::KnnSymmetrization::union_ ? 0 : 1);
  w.section("KCFG", cfg);

  Writer anchors, kernels, alphas;
  anchors.u64(m.anchors.size());
  for (const auto& a : m.anchors) anchors.matrix(a);
  kernels.u64(m.kernels.size());
  for (const auto& k : m.kernels) write_kernel(kernels, k);
  alphas.u64(m.alphas.size());
  for (const auto& a : m.alphas) alphas.matrix(a);
  alphas.vector(m.eigenvalues);
  w.section("ANCH", anchors);
  w.section("KERN", kernels);
  w.section("ALPH", alphas);
}

kema::AlignmentModel read_alignment(Reader& r) {
  kema::AlignmentModel m;
  auto cfg = r.section("KCFG");
  m.config.mu = cfg.f64();
  m.config.latent_dim = static_cast<Index>(cfg.i64());
  m.config.knn_k = static_cast<Index>(cfg.i64());
  m.config.ridge = cfg.f64();
  m.config.kernel = cfg.u32() == 0 ? spectral::KernelKind::rbf : spectral::KernelKind::linear;
  m.config.knn_symmetrization = cfg.u32() == 0 ? spectral::KnnSymmetrization::union_
                                               : spectral::KnnSymmetrization::mutual;
  cfg.expect_done();

  auto anchors = r.section("ANCH");
  const auto na = anchors.u64();
  if (na > 64) throw Error(ErrorCode::CorruptModel, "too many domains");
  for (std::uint64_t k = 0; k < na; ++k) m.anchors.push_back(anchors.matrix());
  anchors.expect_done();
  auto kernels = r.section("KERN");
  const auto nk = kernels.u64();
  if (nk != na) throw Error(ErrorCode::CorruptModel, "kernel count mismatch");
  for (std::uint64_t k = 0; k < nk; ++k) m.kernels.push_back(read_kernel(kernels));
  kernels.expect_done();
  auto alphas = r.section("ALPH");
  const auto nl = alphas.u64();
  if (nl != na) throw Error(ErrorCode::CorruptModel, "alpha block count mismatch");
  for (std::uint64_t k = 0; k < nl; ++k) m.alphas.push_back(alphas.matrix());
  m.eigenvalues = alphas.vector();
  alphas.expect_done();
  for (std::size_t k = 0; k < m.anchors.size(); ++k) {
    if (m.alphas[k].rows() != m.anchors[k].rows() || m.alphas[k].cols() != m.eigenvalues.size()) {
      throw Error(ErrorCode::CorruptModel, "alpha block shape does not match anchors");
    }
  }
  return m;
}

void write(Writer& w, const age::RangeScaler& m) {
  w.vector(m.min);
  w.vector(m.max);
  w.f64(m.lo);
  w.f64(m.hi);
}

age::RangeScaler read_scaler(Reader& r) {
  age::RangeScaler m;
  m.min = r.vector();
  m.max = r.vector();
  m.lo = r.f64();
  m.hi = r.f64();
  if (m.min.size() != m.max.size()) throw Error(ErrorCode::CorruptModel, "scaler shape");
  return m;
}

void write(Writer& w, const age::AgeModel& m) {
  w.matrix(m.w1);
  w.vector(m.b1);
  w.matrix(m.w2);
  w.vector(m.b2);
}

age::AgeModel read_age(Reader& r) {
  age::AgeModel m;
  m.w1 = r.matrix();
  m.b1 = r.vector();
  m.w2 = r.matrix();
  m.b2 = r.vector();
  if (m.b1.size() != m.w1.rows() || m.w2.rows() != m.w1.cols() || m.w2.cols() != m.w1.rows() ||
      m.b2.size() != m.w2.rows()) {
    throw Error(ErrorCode::CorruptModel, "encoder layer shapes disagree");
  }
  return m;
}

void write(Writer& w, const age::ClassTargets& m) {
  w.matrix(m.targets);
  write_counts(w, m.source_counts);
  write_counts(w, m.target_counts);
}

age::ClassTargets read_targets(Reader& r) {
  age::ClassTargets m;
  m.targets = r.matrix();
  m.source_counts = read_counts(r);
  m.target_counts = read_counts(r);
  return m;
}

void write(Writer& w, const svm::SvmModel& m) {
  w.u64(m.classes.size());
  for (int c : m.classes) w.i64(c);
  w.f64(m.gamma);
  w.f64(m.c);
  w.i64(m.dim);
  w.u64(m.machines.size());
  for (const auto& b : m.machines) {
    w.i64(b.positive);
    w.i64(b.negative);
    w.matrix(b.support_vectors);
    w.vector(b.coefficients);
    w.f64(b.bias);
  }
}

svm::SvmModel read_svm(Reader& r) {
  svm::SvmModel m;
  const auto nc = r.u64();
  if (nc > 100000) throw Error(ErrorCode::CorruptModel, "class list too long");
  for (std::uint64_t i = 0; i < nc; ++i) m.classes.push_back(static_cast<int>(r.i64()));
  m.gamma = r.f64();
  m.c = r.f64();
  m.dim = static_cast<Index>(r.i64());
  const auto nm = r.u64();
  if (nm != nc * (nc - 1) / 2) throw Error(ErrorCode::CorruptModel, "machine count mismatch");
  for (std::uint64_t i = 0; i < nm; ++i) {
    svm::BinaryMachine b;
    b.positive = static_cast<int>(r.i64());
    b.negative = static_cast<int>(r.i64());
    b.support_vectors = r.matrix();
    b.coefficients = r.vector();
    b.bias = r.f64();
    if (b.coefficients.size() != b.support_vectors.rows() ||
        (b.support_vectors.rows() > 0 && b.support_vectors.cols() != m.dim)) {
      throw Error(ErrorCode::CorruptModel, "support vector shape mismatch");
    }
    m.machines.push_back(std::move(b));
  }
  return m;
}

std::string encode(const encoding::Codebook& m) { return wrap("codebook", "CODE", m); }
std::string encode(const encoding::PcaModel& m) { return wrap("pca", "PCA_", m); }
std::string encode(const kema::AlignmentModel& m) { return wrap("alignment", "ALGN", m); }
std::string encode(const svm::SvmModel& m) { return wrap("svm", "SVM_", m); }

std::string encode(const AgeBundle& m) {
  Writer body, scaler, targets, source, target;
  write(scaler, m.scaler);
  write(targets, m.targets);
  write(source, m.source);
  write(target, m.target);
  body.section("SCAL", scaler);
  body.section("TARG", targets);
  body.section("ENCS", source);
  body.section("ENCT", target);
  return encode_file("age", body);
}

namespace {

template <typename T, typename Fn>
T unwrap(std::string_view bytes, std::string_view kind, std::string_view tag, Fn read) {
  Reader body = decode_file(bytes, kind);
  Reader sec = body.section(tag);
  T m = read(sec);
  sec.expect_done();
  body.expect_done();
  return m;
}

}  // namespace

encoding::Codebook decode_codebook(std::string_view bytes) {
  return unwrap<encoding::Codebook>(bytes, "codebook", "CODE", read_codebook);
}

encoding::PcaModel decode_pca(std::string_view bytes) {
  return unwrap<encoding::PcaModel>(bytes, "pca", "PCA_", read_pca);
}

kema::AlignmentModel decode_alignment(std::string_view bytes) {
  return unwrap<kema::AlignmentModel>(bytes, "alignment", "ALGN", read_alignment);
}

svm::SvmModel decode_svm(std::string_view bytes) {
  return unwrap<svm::SvmModel>(bytes, "svm", "SVM_", read_svm);
}

AgeBundle decode_age_bundle(std::string_view bytes) {
  Reader body = decode_file(bytes, "age");
  AgeBundle m;
  auto scaler = body.section("SCAL");
  m.scaler = read_scaler(scaler);
  auto targets = body.section("TARG");
  m.targets = read_targets(targets);
  auto source = body.section("ENCS");
  m.source = read_age(source);
  auto target = body.section("ENCT");
  m.target = read_age(target);
  body.expect_done();
  return m;
}

}  // namespace cdfag::io
