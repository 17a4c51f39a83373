#pragma once

// One-vs-one soft-margin SVM with an RBF kernel, solved by SMO, plus
// stratified k-fold grid search over (C, gamma).

#include <cstdint>
#include <vector>

#include "cdfag/types.hpp"

namespace cdfag::svm {

struct SvmConfig {
  double c = 1.0;
  double gamma = 1.0;          // k(x, z) = exp(-gamma |x - z|^2)
  double tolerance = 1e-3;     // maximal KKT violation at termination
  long max_iterations = 0;     // per binary machine; 0 picks max(100000, 100 n)
};

void validate(const SvmConfig& config);

/// Dual solution of one binary problem over a precomputed kernel matrix.
struct BinarySolution {
  Vector alpha;
  double bias = 0.0;
  long iterations = 0;
  bool converged = false;
};

/// SMO with maximal-violating-pair working sets on
///   max sum(alpha) - 1/2 alpha^T Q alpha,  Q_ij = y_i y_j K_ij,
///   0 <= alpha <= C,  y^T alpha = 0.
/// `y` holds +1/-1. Does not throw on hitting the iteration cap; the caller
/// inspects `converged`.
BinarySolution solve_binary(const Matrix& kernel, const Vector& y, double c, double tolerance,
                            long max_iterations);

double dual_objective(const Matrix& kernel, const Vector& y, const Vector& alpha);

struct BinaryMachine {
  int positive = 0;  // lower class id, y = +1
  int negative = 0;
  Matrix support_vectors;
  Vector coefficients;  // alpha_i y_i
  double bias = 0.0;
};

struct SvmModel {
  std::vector<int> classes;  // ascending
  double gamma = 1.0;
  double c = 1.0;
  Index dim = 0;
  std::vector<BinaryMachine> machines;  // (classes[a], classes[b]) for a < b
};

/// Throws SingleClass, NonConvergence.
SvmModel svm_train(const FeatureSet& labeled, const SvmConfig& config);

/// One column per machine: sum_i coef_i k(sv_i, x) + bias.
Matrix decision_values(const SvmModel& model, const Matrix& features);

/// Majority vote over machines; equal vote counts go to the lower class id.
Labels svm_predict(const SvmModel& model, const Matrix& features);

std::vector<double> default_c_grid();
std::vector<double> default_gamma_grid();

/// Stratified fold id per row, deterministic in `seed`. Unlabeled rows get -1.
std::vector<int> stratified_folds(const Labels& labels, int folds, std::uint64_t seed);

struct GridCell {
  double c = 0.0;
  double gamma = 0.0;
  double accuracy = 0.0;  // mean held-out fold accuracy
  bool converged = true;
};

struct GridResult {
  SvmConfig best;
  double best_accuracy = 0.0;
  std::vector<GridCell> cells;  // C-major, both axes ascending
};

/// Picks the cell with the highest mean fold accuracy; ties go to the
/// smaller C, then the smaller gamma. Cells whose solver hits the iteration
/// cap are never chosen. Throws TooFewSamples.
GridResult grid_search_cv(const FeatureSet& labeled, std::vector<double> c_grid,
                          std::vector<double> gamma_grid, int folds, std::uint64_t seed,
                          double tolerance = 1e-3);

}  // namespace cdfag::svm
