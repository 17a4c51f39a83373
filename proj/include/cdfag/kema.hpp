#pragma once

// Semi-supervised kernel manifold alignment of K feature domains into a
// shared latent space.

#include <vector>

#include "cdfag/graph_spectral.hpp"
#include "cdfag/types.hpp"

namespace cdfag::kema {

struct KemaConfig {
  double mu = 0.1;           // topology weight; 1 - mu weights class similarity
  Index latent_dim = 100;
  Index knn_k = 10;
  double ridge = 1e-6;       // relative: absolute ridge = ridge * tr(B) / size
  spectral::KernelKind kernel = spectral::KernelKind::rbf;
  /// Explicit per-domain kernels; empty means `kernel` with the median
  /// heuristic bandwidth fitted on each domain's samples.
  std::vector<spectral::KernelSpec> kernels;
  spectral::KnnSymmetrization knn_symmetrization = spectral::KnnSymmetrization::union_;
};

void validate(const KemaConfig& config);

/// Eigenvalues with magnitude below this are treated as spurious null modes.
inline constexpr double kSpuriousEigenvalue = 1e-12;
/// Modes whose v^T B v falls below this fraction of their (B + ridge I)
/// normalization are carried by the ridge and also dropped.
inline constexpr double kMinDataEnergy = 0.05;

/// The assembled pencil K (mu L_t + (1 - mu) L_s) K v = lambda K L_d K v over
/// the stacked samples of every domain, domains in bundle order.
struct KemaProblem {
  std::vector<Index> offsets;  // first stacked row of each domain, plus total
  std::vector<spectral::KernelSpec> kernels;
  Labels labels;               // stacked
  Matrix kernel;               // block-diagonal K
  spectral::LaplacianTriple laplacians;
  Matrix lhs;                  // K (mu L_t + (1 - mu) L_s) K
  Matrix rhs;                  // K L_d K, without ridge
  double ridge = 0.0;          // absolute ridge added to rhs by the solver
};

/// Throws InsufficientLabels when `require_labels` and fewer than two classes
/// carry labels.
KemaProblem build_problem(const DomainBundle& bundle, const KemaConfig& config,
                          bool require_labels = true);

struct AlignmentModel {
  std::vector<Matrix> anchors;  // training samples per domain
  std::vector<spectral::KernelSpec> kernels;
  std::vector<Matrix> alphas;   // m_k x n per domain
  Vector eigenvalues;           // n, ascending
  KemaConfig config;

  Index latent_dim() const { return eigenvalues.size(); }
  Index domain_count() const { return static_cast<Index>(anchors.size()); }
  /// Rows of the alpha blocks stacked in domain order.
  Matrix stacked_alphas() const;
};

AlignmentModel kema_fit(const DomainBundle& bundle, const KemaConfig& config);

/// Latent coordinates alpha_k^T k(anchors_k, x) for each row x of `samples`.
Matrix kema_project(const AlignmentModel& model, Index domain, const Matrix& samples);

struct Diagnostics {
  double top = 0.0;
  double sim = 0.0;
  double dis = 0.0;
  double objective = 0.0;  // (mu TOP + (1 - mu) SIM) / DIS, +inf when DIS = 0
};

Diagnostics trace_diagnostics(const Matrix& stacked_alphas, const KemaProblem& problem,
                              double mu);

/// Trace-form TOP/SIM/DIS of the model's projections of `bundle`.
Diagnostics kema_diagnostics(const AlignmentModel& model, const DomainBundle& bundle);

}  // namespace cdfag::kema
