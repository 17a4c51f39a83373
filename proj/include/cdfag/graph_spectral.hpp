#pragma once

// Kernels, similarity graphs, graph Laplacians and the symmetric-definite
// generalized eigensolver shared by the alignment stage.

#include <string>

#include "cdfag/types.hpp"

namespace cdfag::spectral {

enum class KernelKind { rbf, linear };

struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  double bandwidth = 1.0;  // sigma; rbf only

  static KernelSpec rbf(double sigma) { return {KernelKind::rbf, sigma}; }
  static KernelSpec linear() { return {KernelKind::linear, 0.0}; }
};

std::string to_string(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& name);

/// Half the median of all pairwise Euclidean distances.
double median_bandwidth(const Matrix& samples);

/// Kernel matrix between the rows of a and b. The rbf entry is
/// exp(-|a-b|^2 / (2 sigma^2)).
Matrix gram(const Matrix& a, const Matrix& b, const KernelSpec& spec);

enum class KnnSymmetrization { union_, mutual };

/// W(i,j) = exp(-|x_i - x_j|^2) on k-nearest-neighbour edges, unit
/// bandwidth. Neighbour ties resolve to the lower index.
Matrix knn_topology_weights(const Matrix& samples, Index k,
                            KnnSymmetrization sym = KnnSymmetrization::union_);

enum class LabelRelation { same_class, different_class };

/// Binary weights between labeled samples; unlabeled rows stay empty.
Matrix label_weights(const Labels& labels, LabelRelation relation);

/// L = diag(row sums) - W. Throws AsymmetricInput.
Matrix laplacian(const Matrix& weights);

struct LaplacianTriple {
  Matrix topology;
  Matrix similarity;
  Matrix dissimilarity;
};

struct GevdResult {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // one column per eigenvalue
  double ridge = 0.0;
};

/// n algebraically smallest eigenpairs of A v = lambda (B + ridge I) v,
/// vectors normalized to v^T (B + ridge I) v = 1 with the largest-magnitude
/// entry positive. Throws SingularPencil when B + ridge I is not positive
/// definite and NonConvergence when the dense solver fails.
GevdResult solve_gevd(const Matrix& a, const Matrix& b, Index n, double ridge);

/// |A v - lambda (B + ridge I) v| for one pair.
double gevd_residual(const Matrix& a, const Matrix& b, double ridge,
                     double lambda, const Vector& v);

}  // namespace cdfag::spectral
