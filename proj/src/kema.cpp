#include "cdfag/kema.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <set>
#include <string>

#include "cdfag/error.hpp"

namespace cdfag::kema {

using spectral::KernelSpec;

void validate(const KemaConfig& config) {
  if (!(config.mu >= 0.0 && config.mu <= 1.0)) {
    throw Error(ErrorCode::BadConfig, "mu must lie in [0, 1]");
  }
  if (config.latent_dim < 1) throw Error(ErrorCode::BadConfig, "latent dimension must be >= 1");
  if (config.knn_k < 1) throw Error(ErrorCode::BadConfig, "knn k must be >= 1");
  if (config.ridge < 0.0) throw Error(ErrorCode::BadConfig, "ridge must be >= 0");
}

Matrix AlignmentModel::stacked_alphas() const {
  Index rows = 0;
  for (const auto& a : alphas) rows += a.rows();
  Matrix out(rows, latent_dim());
  Index at = 0;
  for (const auto& a : alphas) {
    out.middleRows(at, a.rows()) = a;
    at += a.rows();
  }
  return out;
}

KemaProblem build_problem(const DomainBundle& bundle, const KemaConfig& config,
                          bool require_labels) {
  validate(config);
  const auto domain_count = bundle.domains.size();
  if (domain_count < 2) throw Error(ErrorCode::BadConfig, "alignment needs >= 2 domains");
  if (!config.kernels.empty() && config.kernels.size() != domain_count) {
    throw Error(ErrorCode::BadConfig, "one kernel per domain required");
  }

  KemaProblem p;
  std::set<int> classes;
  Index total = 0;
  for (const auto& d : bundle.domains) {
    validate(d, bundle.class_count);
    if (d.size() == 0) throw Error(ErrorCode::EmptyInput, "empty domain");
    p.offsets.push_back(total);
    total += d.size();
    for (int l : d.labels) {
      p.labels.push_back(l);
      if (l != kUnlabeled) classes.insert(l);
    }
  }
  p.offsets.push_back(total);
  if (require_labels && classes.size() < 2) {
    throw Error(ErrorCode::InsufficientLabels, "labeled samples span fewer than 2 classes");
  }

  p.kernel = Matrix::Zero(total, total);
  Matrix topology_w = Matrix::Zero(total, total);
  for (std::size_t k = 0; k < domain_count; ++k) {
    const auto& x = bundle.domains[k].features;
    KernelSpec spec;
    if (!config.kernels.empty()) {
      spec = config.kernels[k];
    } else if (config.kernel == spectral::KernelKind::rbf) {
      spec = KernelSpec::rbf(spectral::median_bandwidth(x));
    } else {
      spec = KernelSpec::linear();
    }
    p.kernels.push_back(spec);
    const Index at = p.offsets[k];
    const Index m = x.rows();
    p.kernel.block(at, at, m, m) = spectral::gram(x, x, spec);
    // Topology edges stay within a domain.
    const Index k_nn = std::min(config.knn_k, m - 1);
    if (k_nn >= 1) {
      topology_w.block(at, at, m, m) =
          spectral::knn_topology_weights(x, k_nn, config.knn_symmetrization);
    }
  }

  p.laplacians.topology = spectral::laplacian(topology_w);
  p.laplacians.similarity =
      spectral::laplacian(spectral::label_weights(p.labels, spectral::LabelRelation::same_class));
  p.laplacians.dissimilarity = spectral::laplacian(
      spectral::label_weights(p.labels, spectral::LabelRelation::different_class));

  const Matrix mixed = config.mu * p.laplacians.topology +
                       (1.0 - config.mu) * p.laplacians.similarity;
  p.lhs = p.kernel * mixed * p.kernel;
  p.rhs = p.kernel * p.laplacians.dissimilarity * p.kernel;
  p.lhs = 0.5 * (p.lhs + p.lhs.transpose());
  p.rhs = 0.5 * (p.rhs + p.rhs.transpose());
  p.ridge = config.ridge * p.rhs.trace() / static_cast<double>(total);
  return p;
}

AlignmentModel kema_fit(const DomainBundle& bundle, const KemaConfig& config) {
  KemaProblem problem = build_problem(bundle, config);
  const Index total = problem.offsets.back();
  if (config.latent_dim > total) {
    throw Error(ErrorCode::BadConfig, "latent dimension " + std::to_string(config.latent_dim) +
                                          " exceeds " + std::to_string(total) + " samples");
  }

  const auto all = spectral::solve_gevd(problem.lhs, problem.rhs, total, problem.ridge);
  std::vector<Index> keep;
  for (Index i = 0; i < total && static_cast<Index>(keep.size()) < config.latent_dim; ++i) {
    // Vectors are normalized against B + ridge I; a mode whose B part is
    // small is defined by the ridge rather than the data.
    const Vector& v = all.eigenvectors.col(i);
    const bool ridge_supported = v.dot(problem.rhs * v) < kMinDataEnergy;
    if (std::abs(all.eigenvalues(i)) >= kSpuriousEigenvalue && !ridge_supported) keep.push_back(i);
  }
  if (static_cast<Index>(keep.size()) < config.latent_dim) {
    std::clog << "warning: latent dimension clamped from " << config.latent_dim << " to "
              << keep.size() << " (pencil rank)\n";
  }
  if (keep.empty()) throw Error(ErrorCode::SingularPencil, "no non-null eigenpairs");

  const auto n = static_cast<Index>(keep.size());
  Matrix lambda(total, n);
  AlignmentModel model;
  model.eigenvalues.resize(n);
  for (Index j = 0; j < n; ++j) {
    lambda.col(j) = all.eigenvectors.col(keep[static_cast<std::size_t>(j)]);
    model.eigenvalues(j) = all.eigenvalues(keep[static_cast<std::size_t>(j)]);
  }
  model.config = config;
  model.config.latent_dim = n;
  model.kernels = problem.kernels;
  for (std::size_t k = 0; k < bundle.domains.size(); ++k) {
    const Index at = problem.offsets[k];
    const Index m = problem.offsets[k + 1] - at;
    model.anchors.push_back(bundle.domains[k].features);
    model.alphas.push_back(lambda.middleRows(at, m));
  }
  return model;
}

Matrix kema_project(const AlignmentModel& model, Index domain, const Matrix& samples) {
  if (domain < 0 || domain >= model.domain_count()) {
    throw Error(ErrorCode::UnknownDomain, "domain " + std::to_string(domain));
  }
  const auto k = static_cast<std::size_t>(domain);
  const Matrix& anchors = model.anchors[k];
  if (samples.cols() != anchors.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "domain " + std::to_string(domain) + " expects " +
                                                  std::to_string(anchors.cols()) + " columns, got " +
                                                  std::to_string(samples.cols()));
  }
  return spectral::gram(samples, anchors, model.kernels[k]) * model.alphas[k];
}

Diagnostics trace_diagnostics(const Matrix& stacked_alphas, const KemaProblem& problem,
                              double mu) {
  const Matrix latent = problem.kernel * stacked_alphas;
  Diagnostics d;
  d.top = (latent.transpose() * problem.laplacians.topology * latent).trace();
  d.sim = (latent.transpose() * problem.laplacians.similarity * latent).trace();
  d.dis = (latent.transpose() * problem.laplacians.dissimilarity * latent).trace();
  d.objective = d.dis > 0.0 ? (mu * d.top + (1.0 - mu) * d.sim) / d.dis
                            : std::numeric_limits<double>::infinity();
  return d;
}

Diagnostics kema_diagnostics(const AlignmentModel& model, const DomainBundle& bundle) {
  if (bundle.domains.size() != model.anchors.size()) {
    throw Error(ErrorCode::DimensionMismatch, "bundle and model domain counts differ");
  }
  for (std::size_t k = 0; k < bundle.domains.size(); ++k) {
    if (bundle.domains[k].size() != model.alphas[k].rows()) {
      throw Error(ErrorCode::DimensionMismatch, "bundle does not match the fitted samples");
    }
  }
  KemaConfig config = model.config;
  config.kernels = model.kernels;
  // Diagnostics do not need the labeled-class precondition of a fit.
  const KemaProblem problem = build_problem(bundle, config, false);
  return trace_diagnostics(model.stacked_alphas(), problem, config.mu);
}

}  // namespace cdfag::kema
