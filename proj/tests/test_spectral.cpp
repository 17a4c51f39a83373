#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cdfag/error.hpp"
#include "cdfag/graph_spectral.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cdfag;
using namespace cdfag::spectral;

namespace {

Matrix line(std::initializer_list<double> xs) {
  Matrix m(static_cast<Index>(xs.size()), 1);
  Index i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

}  // namespace

TEST_CASE("median bandwidth") {
  CHECK(median_bandwidth(line({0, 1, 3})) == doctest::Approx(1.0));
  CHECK(median_bandwidth(line({0, 4})) == doctest::Approx(2.0));
  CHECK(code_of([] { median_bandwidth(line({2, 2, 2})); }) == ErrorCode::DegenerateData);

  Rng rng(7);
  const Matrix x = oracle::random_matrix(50, 4, rng);
  CHECK(median_bandwidth(x) == doctest::Approx(0.5 * oracle::median_sorted(oracle::sorted_pair_distances(x))).epsilon(1e-14));

  // even number of pairs averages the two central distances
  const Matrix four = line({0, 1, 3, 7});  // distances 1 2 3 4 6 7
  CHECK(median_bandwidth(four) == doctest::Approx(0.5 * 3.5));
}

TEST_CASE("gram kernels") {
  Rng rng(3);
  const Matrix a = oracle::random_matrix(6, 3, rng);
  const Matrix k = gram(a, a, KernelSpec::rbf(0.8));
  CHECK(k.diagonal().isOnes(1e-15));
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(oracle::min_eigenvalue(k) >= -1e-10);
  CHECK(k.minCoeff() > 0.0);
  CHECK(k.maxCoeff() <= 1.0);

  const double sigma = 1.3;
  Matrix p = Matrix::Zero(1, 2), q = Matrix::Zero(1, 2);
  q(0, 0) = std::sqrt(2.0 * sigma * sigma * std::log(2.0));
  CHECK(gram(p, q, KernelSpec::rbf(sigma))(0, 0) == doctest::Approx(0.5).epsilon(1e-14));

  const Matrix lin = gram(a, a, KernelSpec::linear());
  CHECK((lin - a * a.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(code_of([&] { gram(a, Matrix::Zero(2, 4), KernelSpec::linear()); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("knn topology weights") {
  const Matrix w = knn_topology_weights(line({0, 1, 3}), 1);
  CHECK(w(0, 1) == doctest::Approx(std::exp(-1.0)));
  CHECK(w(1, 2) == doctest::Approx(std::exp(-4.0)));
  CHECK(w(0, 2) == 0.0);
  CHECK(w.diagonal().isZero(0));
  CHECK(code_of([] { knn_topology_weights(line({0, 1, 3}), 3); }) == ErrorCode::BadConfig);

  Rng rng(11);
  const Matrix x = oracle::random_matrix(20, 3, rng, 0.6);
  SUBCASE("k = N - 1 gives the dense kernel") {
    const Matrix dense = knn_topology_weights(x, 19);
    for (Index i = 0; i < 20; ++i) {
      for (Index j = 0; j < 20; ++j) {
        const double expect = i == j ? 0.0 : std::exp(-(x.row(i) - x.row(j)).squaredNorm());
        CHECK(dense(i, j) == doctest::Approx(expect).epsilon(1e-14));
      }
    }
  }
  SUBCASE("edges follow the union rule against brute-force lists") {
    const Matrix wk = knn_topology_weights(x, 10);
    const auto nn = oracle::knn_lists(x, 10);
    auto in = [&](Index i, Index j) {
      const auto& l = nn[static_cast<std::size_t>(i)];
      return std::find(l.begin(), l.end(), j) != l.end();
    };
    for (Index i = 0; i < 20; ++i) {
      for (Index j = 0; j < 20; ++j) {
        if (i == j) continue;
        const bool edge = in(i, j) || in(j, i);
        CHECK((wk(i, j) > 0.0) == edge);
        if (edge) CHECK(wk(i, j) == doctest::Approx(std::exp(-(x.row(i) - x.row(j)).squaredNorm())));
      }
    }
    const Matrix mutual = knn_topology_weights(x, 10, KnnSymmetrization::mutual);
    for (Index i = 0; i < 20; ++i) {
      for (Index j = 0; j < 20; ++j) {
        if (i != j) CHECK((mutual(i, j) > 0.0) == (in(i, j) && in(j, i)));
      }
    }
  }
  SUBCASE("row permutation permutes the weights") {
    std::vector<Index> perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    Rng prng(5);
    prng.shuffle(perm);
    // ties are absent in random data, so the neighbour sets are permutation-invariant
    Matrix px(20, 3);
    for (Index i = 0; i < 20; ++i) px.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    const Matrix w0 = knn_topology_weights(x, 4);
    const Matrix w1 = knn_topology_weights(px, 4);
    for (Index i = 0; i < 20; ++i) {
      for (Index j = 0; j < 20; ++j) {
        CHECK(w1(i, j) == w0(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]));
      }
    }
  }
}

TEST_CASE("knn ties resolve to the lower index") {
  // point 0 sits at the centre of a square; its four neighbours tie exactly
  Matrix x(5, 2);
  x << 0, 0, 1, 0, 0, 1, -1, 0, 0, -1;
  const Matrix w = knn_topology_weights(x, 2, KnnSymmetrization::mutual);
  // with mutual edges only, 0's picks (1, 2) survive when they also pick 0
  CHECK(w(0, 1) > 0.0);
  CHECK(w(0, 2) > 0.0);
  CHECK(w(0, 3) == 0.0);
  CHECK(w(0, 4) == 0.0);
  for (int rep = 0; rep < 3; ++rep) CHECK((knn_topology_weights(x, 2) - knn_topology_weights(x, 2)).isZero(0));
}

TEST_CASE("label weights") {
  const Matrix s = label_weights({0, 0, 1}, LabelRelation::same_class);
  CHECK(s(0, 1) == 1.0);
  CHECK(s.sum() == 2.0);
  const Matrix u = label_weights({0, kUnlabeled, 0}, LabelRelation::same_class);
  CHECK(u(0, 2) == 1.0);
  CHECK(u.row(1).isZero(0));
  CHECK(u.col(1).isZero(0));
  const Matrix d = label_weights({0, 1, 2}, LabelRelation::different_class);
  CHECK(d == (Matrix::Ones(3, 3) - Matrix::Identity(3, 3)));
}

TEST_CASE("laplacian") {
  Matrix w(2, 2);
  w << 0, 1, 1, 0;
  Matrix expect(2, 2);
  expect << 1, -1, -1, 1;
  CHECK(laplacian(w) == expect);
  CHECK(laplacian(Matrix::Zero(3, 3)).isZero(0));

  Matrix bad = w;
  bad(0, 1) = 2.0;
  CHECK(code_of([&] { laplacian(bad); }) == ErrorCode::AsymmetricInput);

  Rng rng(13);
  Matrix r = oracle::random_matrix(12, 12, rng).cwiseAbs();
  r = 0.5 * (r + r.transpose()).eval();
  r.diagonal().setZero();
  const Matrix l = laplacian(r);
  CHECK(l.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(oracle::min_eigenvalue(l) >= -1e-8);
  for (int t = 0; t < 100; ++t) {
    const Vector x = oracle::random_matrix(12, 1, rng);
    double quad = 0.0;
    for (Index i = 0; i < 12; ++i) {
      for (Index j = 0; j < 12; ++j) quad += 0.5 * r(i, j) * (x(i) - x(j)) * (x(i) - x(j));
    }
    CHECK(x.dot(l * x) == doctest::Approx(quad).epsilon(1e-9));
  }
}

TEST_CASE("generalized eigensolver") {
  SUBCASE("diagonal") {
    Matrix a = Matrix::Zero(2, 2);
    a.diagonal() << 1, 2;
    const auto r = solve_gevd(a, Matrix::Identity(2, 2), 2, 0.0);
    CHECK(r.eigenvalues(0) == doctest::Approx(1.0));
    CHECK(r.eigenvalues(1) == doctest::Approx(2.0));
    CHECK(r.eigenvectors.isIdentity(1e-12));
  }
  SUBCASE("identity pencil") {
    const auto r = solve_gevd(Matrix::Identity(4, 4), Matrix::Identity(4, 4), 4, 0.0);
    CHECK((r.eigenvalues.array() - 1.0).abs().maxCoeff() <= 1e-12);
  }
  SUBCASE("whitening oracle and residual bound on random SPD pencils") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix a = oracle::random_symmetric(8, rng);
      const Matrix b = oracle::random_spd(8, rng);
      const double ridge = trial % 2 ? 1e-6 : 0.0;
      const auto r = solve_gevd(a, b, 8, ridge);
      const Vector ref = oracle::whitened_eigenvalues(a, b, ridge);
      CHECK((r.eigenvalues - ref).cwiseAbs().maxCoeff() <= 1e-8);
      for (Index j = 0; j < 8; ++j) {
        const double lam = r.eigenvalues(j);
        const Vector v = r.eigenvectors.col(j);
        CHECK(gevd_residual(a, b, ridge, lam, v) <= 1e-6 * (a.norm() + std::abs(lam) * b.norm()));
        CHECK(v.dot((b + ridge * Matrix::Identity(8, 8)) * v) == doctest::Approx(1.0).epsilon(1e-10));
        Index big = 0;
        v.cwiseAbs().maxCoeff(&big);
        CHECK(v(big) > 0.0);
        if (j > 0) CHECK(r.eigenvalues(j) >= r.eigenvalues(j - 1));
      }
    }
  }
  SUBCASE("fewer pairs than the size") {
    Rng rng(19);
    const Matrix a = oracle::random_symmetric(6, rng);
    const Matrix b = oracle::random_spd(6, rng);
    const auto r = solve_gevd(a, b, 3, 0.0);
    CHECK(r.eigenvalues.size() == 3);
    CHECK(r.eigenvectors.cols() == 3);
    CHECK((r.eigenvalues - oracle::whitened_eigenvalues(a, b, 0.0).head(3)).cwiseAbs().maxCoeff() <= 1e-8);
  }
  SUBCASE("indefinite right-hand side") {
    Matrix b = Matrix::Identity(3, 3);
    b(2, 2) = -1.0;
    CHECK(code_of([&] { solve_gevd(Matrix::Identity(3, 3), b, 3, 0.0); }) == ErrorCode::SingularPencil);
    CHECK(code_of([&] { solve_gevd(Matrix::Identity(3, 3), Matrix::Zero(3, 3), 3, 0.0); }) ==
          ErrorCode::SingularPencil);
  }
}
