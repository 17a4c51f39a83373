#include "cdfag/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>

#include "cdfag/error.hpp"
#include "cdfag/random.hpp"

namespace cdfag::svm {

void validate(const SvmConfig& config) {
  if (!(config.c > 0.0)) throw Error(ErrorCode::BadConfig, "C must be > 0");
  if (!(config.gamma > 0.0)) throw Error(ErrorCode::BadConfig, "gamma must be > 0");
  if (!(config.tolerance > 0.0)) throw Error(ErrorCode::BadConfig, "tolerance must be > 0");
  if (config.max_iterations < 0) throw Error(ErrorCode::BadConfig, "iteration cap must be >= 0");
}

BinarySolution solve_binary(const Matrix& kernel, const Vector& y, double c, double tolerance,
                            long max_iterations) {
  const Index n = y.size();
  constexpr double kTau = 1e-12;
  BinarySolution s;
  s.alpha = Vector::Zero(n);
  Vector grad = -Vector::Ones(n);  // Q alpha - e
  if (max_iterations <= 0) max_iterations = std::max(100000L, 100L * static_cast<long>(n));

  auto in_up = [&](Index t) {
    return (y(t) > 0 && s.alpha(t) < c) || (y(t) < 0 && s.alpha(t) > 0);
  };
  auto in_low = [&](Index t) {
    return (y(t) < 0 && s.alpha(t) < c) || (y(t) > 0 && s.alpha(t) > 0);
  };

  while (true) {
    Index i = -1, j = -1;
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    for (Index t = 0; t < n; ++t) {
      const double v = -y(t) * grad(t);
      if (in_up(t) && v > g_max) {
        g_max = v;
        i = t;
      }
      if (in_low(t) && v < g_min) {
        g_min = v;
        j = t;
      }
    }
    if (i < 0 || j < 0 || g_max - g_min <= tolerance) {
      s.converged = true;
      break;
    }
    if (s.iterations >= max_iterations) break;
    ++s.iterations;

    const double old_i = s.alpha(i);
    const double old_j = s.alpha(j);
    const double qij = y(i) * y(j) * kernel(i, j);
    if (y(i) != y(j)) {
      const double quad = std::max(kernel(i, i) + kernel(j, j) + 2.0 * qij, kTau);
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = old_i - old_j;
      double ai = old_i + delta;
      double aj = old_j + delta;
      if (diff > 0) {
        if (aj < 0) { aj = 0; ai = diff; }
      } else {
        if (ai < 0) { ai = 0; aj = -diff; }
      }
      if (diff > 0) {
        if (ai > c) { ai = c; aj = c - diff; }
      } else {
        if (aj > c) { aj = c; ai = c + diff; }
      }
      s.alpha(i) = ai;
      s.alpha(j) = aj;
    } else {
      const double quad = std::max(kernel(i, i) + kernel(j, j) - 2.0 * qij, kTau);
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = old_i + old_j;
      double ai = old_i - delta;
      double aj = old_j + delta;
      if (sum > c) {
        if (ai > c) { ai = c; aj = sum - c; }
      } else {
        if (aj < 0) { aj = 0; ai = sum; }
      }
      if (sum > c) {
        if (aj > c) { aj = c; ai = sum - c; }
      } else {
        if (ai < 0) { ai = 0; aj = sum; }
      }
      s.alpha(i) = ai;
      s.alpha(j) = aj;
    }
    const double di = s.alpha(i) - old_i;
    const double dj = s.alpha(j) - old_j;
    for (Index t = 0; t < n; ++t) {
      grad(t) += y(t) * (y(i) * kernel(t, i) * di + y(j) * kernel(t, j) * dj);
    }
  }

  // Bias from free multipliers, else the midpoint of the feasible interval.
  double sum_free = 0.0;
  Index free = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  for (Index t = 0; t < n; ++t) {
    const double yg = y(t) * grad(t);
    if (s.alpha(t) > 0 && s.alpha(t) < c) {
      sum_free += yg;
      ++free;
    } else if ((s.alpha(t) >= c && y(t) < 0) || (s.alpha(t) <= 0 && y(t) > 0)) {
      ub = std::min(ub, yg);
    } else {
      lb = std::max(lb, yg);
    }
  }
  double rho;
  if (free > 0) {
    rho = sum_free / static_cast<double>(free);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    rho = 0.5 * (ub + lb);
  } else {
    rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  }
  s.bias = -rho;
  return s;
}

double dual_objective(const Matrix& kernel, const Vector& y, const Vector& alpha) {
  const Vector ya = y.cwiseProduct(alpha);
  return alpha.sum() - 0.5 * ya.dot(kernel * ya);
}

namespace {

Matrix rbf(const Matrix& a, const Matrix& b, double gamma) {
  return (squared_distances(a, b) * -gamma).array().exp().matrix();
}

struct PairFit {
  int positive;
  int negative;
  std::vector<Index> rows;  // into the training set
  Vector coefficients;      // alpha y over `rows`
  double bias;
  bool converged;
};

// One-vs-one fit over a precomputed kernel on `rows` of the full set.
std::vector<PairFit> fit_pairs(const Matrix& kernel, const Labels& labels,
                               const std::vector<Index>& rows, const std::vector<int>& classes,
                               const SvmConfig& config) {
  std::vector<PairFit> fits;
  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (std::size_t b = a + 1; b < classes.size(); ++b) {
      PairFit fit{classes[a], classes[b], {}, {}, 0.0, false};
      for (Index r : rows) {
        const int l = labels[static_cast<std::size_t>(r)];
        if (l == fit.positive || l == fit.negative) fit.rows.push_back(r);
      }
      const auto m = static_cast<Index>(fit.rows.size());
      Matrix k(m, m);
      Vector y(m);
      for (Index p = 0; p < m; ++p) {
        y(p) = labels[static_cast<std::size_t>(fit.rows[static_cast<std::size_t>(p)])] == fit.positive ? 1.0 : -1.0;
        for (Index q = 0; q < m; ++q) {
          k(p, q) = kernel(fit.rows[static_cast<std::size_t>(p)], fit.rows[static_cast<std::size_t>(q)]);
        }
      }
      const auto sol = solve_binary(k, y, config.c, config.tolerance, config.max_iterations);
      fit.coefficients = sol.alpha.cwiseProduct(y);
      fit.bias = sol.bias;
      fit.converged = sol.converged;
      fits.push_back(std::move(fit));
    }
  }
  return fits;
}

int vote(const std::vector<int>& classes, const std::vector<int>& winners) {
  std::map<int, int> counts;
  for (int w : winners) ++counts[w];
  int best = classes.front();
  int best_votes = -1;
  for (int c : classes) {
    const int v = counts.count(c) ? counts[c] : 0;
    if (v > best_votes) {
      best_votes = v;
      best = c;
    }
  }
  return best;
}

std::vector<int> class_list(const Labels& labels) {
  std::set<int> s;
  for (int l : labels) {
    if (l != kUnlabeled) s.insert(l);
  }
  return {s.begin(), s.end()};
}

}  // namespace

SvmModel svm_train(const FeatureSet& labeled, const SvmConfig& config) {
  validate(config);
  validate(labeled);
  const FeatureSet data = labeled.labeled_only();
  SvmModel model;
  model.classes = class_list(data.labels);
  if (model.classes.size() < 2) {
    throw Error(ErrorCode::SingleClass, "need samples from >= 2 classes");
  }
  model.gamma = config.gamma;
  model.c = config.c;
  model.dim = data.dim();

  const Matrix kernel = rbf(data.features, data.features, config.gamma);
  std::vector<Index> rows(static_cast<std::size_t>(data.size()));
  for (Index i = 0; i < data.size(); ++i) rows[static_cast<std::size_t>(i)] = i;
  for (const auto& fit : fit_pairs(kernel, data.labels, rows, model.classes, config)) {
    if (!fit.converged) {
      throw Error(ErrorCode::NonConvergence, "SMO hit its iteration cap for classes " +
                                                 std::to_string(fit.positive) + "/" +
                                                 std::to_string(fit.negative));
    }
    BinaryMachine m;
    m.positive = fit.positive;
    m.negative = fit.negative;
    m.bias = fit.bias;
    std::vector<Index> support;
    for (std::size_t p = 0; p < fit.rows.size(); ++p) {
      if (fit.coefficients(static_cast<Index>(p)) != 0.0) support.push_back(static_cast<Index>(p));
    }
    m.support_vectors.resize(static_cast<Index>(support.size()), data.dim());
    m.coefficients.resize(static_cast<Index>(support.size()));
    for (std::size_t s = 0; s < support.size(); ++s) {
      m.support_vectors.row(static_cast<Index>(s)) = data.features.row(fit.rows[static_cast<std::size_t>(support[s])]);
      m.coefficients(static_cast<Index>(s)) = fit.coefficients(support[s]);
    }
    model.machines.push_back(std::move(m));
  }
  return model;
}

Matrix decision_values(const SvmModel& model, const Matrix& features) {
  if (features.cols() != model.dim) {
    throw Error(ErrorCode::DimensionMismatch, "SVM expects " + std::to_string(model.dim) +
                                                  " features, got " +
                                                  std::to_string(features.cols()));
  }
  Matrix out(features.rows(), static_cast<Index>(model.machines.size()));
  for (std::size_t m = 0; m < model.machines.size(); ++m) {
    const auto& machine = model.machines[m];
    Vector f = Vector::Constant(features.rows(), machine.bias);
    if (machine.support_vectors.rows() > 0) {
      f += rbf(features, machine.support_vectors, model.gamma) * machine.coefficients;
    }
    out.col(static_cast<Index>(m)) = f;
  }
  return out;
}

Labels svm_predict(const SvmModel& model, const Matrix& features) {
  const Matrix dec = decision_values(model, features);
  Labels out(static_cast<std::size_t>(features.rows()));
  std::vector<int> winners(model.machines.size());
  for (Index i = 0; i < features.rows(); ++i) {
    for (std::size_t m = 0; m < model.machines.size(); ++m) {
      winners[m] = dec(i, static_cast<Index>(m)) > 0 ? model.machines[m].positive
                                                     : model.machines[m].negative;
    }
    out[static_cast<std::size_t>(i)] = vote(model.classes, winners);
  }
  return out;
}

std::vector<double> default_c_grid() {
  std::vector<double> g;
  for (int e = -5; e <= 15; e += 2) g.push_back(std::ldexp(1.0, e));
  return g;
}

std::vector<double> default_gamma_grid() {
  std::vector<double> g;
  for (int e = -15; e <= 3; e += 2) g.push_back(std::ldexp(1.0, e));
  return g;
}

std::vector<int> stratified_folds(const Labels& labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::BadConfig, "need >= 2 folds");
  Rng rng(seed);
  std::vector<int> fold(labels.size(), -1);
  for (int c : class_list(labels)) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) members.push_back(i);
    }
    if (members.size() < static_cast<std::size_t>(folds)) {
      throw Error(ErrorCode::TooFewSamples, "class " + std::to_string(c) + " has " +
                                                std::to_string(members.size()) + " samples for " +
                                                std::to_string(folds) + " folds");
    }
    rng.shuffle(members);
    for (std::size_t p = 0; p < members.size(); ++p) {
      fold[members[p]] = static_cast<int>(p % static_cast<std::size_t>(folds));
    }
  }
  return fold;
}

GridResult grid_search_cv(const FeatureSet& labeled, std::vector<double> c_grid,
                          std::vector<double> gamma_grid, int folds, std::uint64_t seed,
                          double tolerance) {
  if (c_grid.empty() || gamma_grid.empty()) throw Error(ErrorCode::BadConfig, "empty grid");
  validate(labeled);
  const FeatureSet data = labeled.labeled_only();
  const auto classes = class_list(data.labels);
  if (classes.size() < 2) throw Error(ErrorCode::SingleClass, "need samples from >= 2 classes");
  const auto fold = stratified_folds(data.labels, folds, seed);
  std::sort(c_grid.begin(), c_grid.end());
  std::sort(gamma_grid.begin(), gamma_grid.end());

  const Matrix d2 = squared_distances(data.features, data.features);
  GridResult result;
  result.best_accuracy = -1.0;
  for (double c : c_grid) {
    for (double gamma : gamma_grid) {
      SvmConfig config{c, gamma, tolerance, 0};
      validate(config);
      const Matrix kernel = (d2 * -gamma).array().exp().matrix();
      GridCell cell{c, gamma, 0.0, true};
      for (int f = 0; f < folds; ++f) {
        std::vector<Index> train, held;
        for (std::size_t i = 0; i < fold.size(); ++i) {
          (fold[i] == f ? held : train).push_back(static_cast<Index>(i));
        }
        const auto fits = fit_pairs(kernel, data.labels, train, classes, config);
        std::size_t correct = 0;
        std::vector<int> winners(fits.size());
        for (Index h : held) {
          for (std::size_t m = 0; m < fits.size(); ++m) {
            const auto& fit = fits[m];
            cell.converged = cell.converged && fit.converged;
            double v = fit.bias;
            for (std::size_t p = 0; p < fit.rows.size(); ++p) {
              v += fit.coefficients(static_cast<Index>(p)) * kernel(h, fit.rows[p]);
            }
            winners[m] = v > 0 ? fit.positive : fit.negative;
          }
          correct += vote(classes, winners) == data.labels[static_cast<std::size_t>(h)];
        }
        cell.accuracy += static_cast<double>(correct) / static_cast<double>(held.size());
      }
      cell.accuracy /= folds;
      result.cells.push_back(cell);
      if (cell.converged && cell.accuracy > result.best_accuracy + 1e-12) {
        result.best_accuracy = cell.accuracy;
        result.best = config;
      }
    }
  }
  if (result.best_accuracy < 0.0) {
    throw Error(ErrorCode::NonConvergence, "no grid cell converged");
  }
  return result;
}

}  // namespace cdfag::svm
