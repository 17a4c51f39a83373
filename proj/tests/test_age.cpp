#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>

#include "cdfag/age.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cdfag;
using namespace cdfag::age;

namespace {

AgeModel zero_model(Index l, Index h) {
  return AgeModel{Matrix::Zero(h, l), Vector::Zero(h), Matrix::Zero(l, h), Vector::Zero(l)};
}

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Index>(r.size()), static_cast<Index>(r.begin()->size()));
  Index i = 0;
  for (const auto& row : r) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST_CASE("range scaler") {
  const Matrix x = rows({{0, 5, 2}, {10, 5, 4}, {5, 5, 3}});
  const RangeScaler s = RangeScaler::fit(x);
  const Matrix t = s.transform(x);
  CHECK(t(0, 0) == doctest::Approx(0.1));
  CHECK(t(1, 0) == doctest::Approx(0.9));
  CHECK(t(2, 0) == doctest::Approx(0.5));
  CHECK(t.col(1).isConstant(0.5));
  CHECK((s.inverse(t).col(0) - x.col(0)).isZero(1e-12));
  CHECK((s.inverse(t).col(2) - x.col(2)).isZero(1e-12));
  CHECK(code_of([&] { s.transform(Matrix::Zero(1, 2)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("class targets are pooled means") {
  const RangeScaler id = RangeScaler::identity(2);
  SUBCASE("two-point mean") {
    const auto t = class_targets({rows({{0, 2}}), {0}}, {rows({{2, 0}}), {0}}, id, 1);
    CHECK(t.targets.row(0) == rows({{1, 1}}).row(0));
  }
  SUBCASE("single instance") {
    const auto t = class_targets({rows({{0.3, 0.7}}), {0}}, {Matrix(0, 2), {}}, id, 1);
    CHECK(t.targets.row(0) == rows({{0.3, 0.7}}).row(0));
  }
  SUBCASE("unequal domain counts weigh every instance equally") {
    const auto t = class_targets({rows({{1, 1}, {3, 3}}), {0, 0}}, {rows({{2, 2}}), {0}}, id, 1);
    CHECK(t.targets.row(0) == rows({{2, 2}}).row(0));
    CHECK(t.source_counts[0] == 2);
    CHECK(t.target_counts[0] == 1);
  }
  SUBCASE("unlabeled rows are ignored and missing classes rejected") {
    const auto t = class_targets({rows({{1, 1}, {9, 9}}), {0, kUnlabeled}}, {rows({{3, 3}}), {1}}, id, 2);
    CHECK(t.targets.row(0) == rows({{1, 1}}).row(0));
    CHECK(t.targets.row(1) == rows({{3, 3}}).row(0));
    CHECK(code_of([&] { class_targets({rows({{1, 1}}), {0}}, {rows({{3, 3}}), {0}}, id, 2); }) ==
          ErrorCode::MissingClass);
  }
  SUBCASE("targets live in the scaled space") {
    const Matrix x = rows({{0, 10}, {10, 0}});
    const RangeScaler s = RangeScaler::fit(x);
    const auto t = class_targets({x.topRows(1), {0}}, {x.bottomRows(1), {0}}, s, 1);
    CHECK(t.targets(0, 0) == doctest::Approx(0.5));
    CHECK(t.targets(0, 1) == doctest::Approx(0.5));
  }
}

TEST_CASE("forward pass") {
  const AgeModel z = zero_model(3, 3);
  const Vector out = age_forward(z, Vector::Constant(3, 7.0));
  CHECK(out.isConstant(0.5, 0));
  Rng rng(2);
  CHECK(age_generalize(z, oracle::random_matrix(4, 3, rng)).isConstant(0.5, 0));
  CHECK(age_forward(zero_model(1, 1), Vector::Constant(1, -3.0))(0) == 0.5);

  const AgeModel m = initialize(5, 4, InitScheme::unit_uniform, 9);
  for (int t = 0; t < 10; ++t) {
    const Vector x = oracle::random_matrix(5, 1, rng);
    CHECK((age_forward(m, x) - oracle::forward(m, x)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK(code_of([&] { age_forward(m, Vector::Zero(4)); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { age_generalize(m, Matrix::Zero(2, 4)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("initialization") {
  const AgeModel u = initialize(6, 6, InitScheme::unit_uniform, 1);
  for (const double* p : {u.w1.data(), u.w2.data()}) {
    for (Index i = 0; i < 36; ++i) CHECK((p[i] >= 0.0 && p[i] < 1.0));
  }
  CHECK(u.b1.minCoeff() >= 0.0);
  const AgeModel s = initialize(6, 4, InitScheme::scaled_uniform, 1);
  CHECK(s.w1.rows() == 4);
  CHECK(s.w1.cwiseAbs().maxCoeff() <= std::sqrt(0.6));
  CHECK(s.b1.isZero(0));
  CHECK(initialize(6, 6, InitScheme::unit_uniform, 1).w1 == u.w1);
  CHECK(initialize(6, 6, InitScheme::unit_uniform, 2).w1 != u.w1);
  CHECK(parse_init_scheme("scaled_uniform") == InitScheme::scaled_uniform);
  CHECK(code_of([] { parse_init_scheme("xavier"); }) == ErrorCode::BadConfig);
}

TEST_CASE("momentum step") {
  double w = 1.0, v = 0.0;
  Eigen::Matrix<double, 1, 1> W, V, G;
  W << w;
  V << v;
  G << 0.5;
  momentum_step(W, V, G, 0.1, 0.9);
  CHECK(V(0) == doctest::Approx(0.05));
  CHECK(W(0) == doctest::Approx(0.95));
  G << 0.0;
  momentum_step(W, V, G, 0.1, 0.9);
  CHECK(V(0) == doctest::Approx(0.045));
  CHECK(W(0) == doctest::Approx(0.905));
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(21);
  for (auto scheme : {InitScheme::scaled_uniform, InitScheme::unit_uniform}) {
    const AgeModel m = initialize(4, 4, scheme, 5);
    Matrix x = oracle::random_matrix(7, 4, rng).cwiseAbs().cwiseMin(1.0);
    Matrix t = (0.1 + 0.8 * oracle::random_matrix(7, 4, rng).cwiseAbs().cwiseMin(1.0).array()).matrix();
    if (scheme == InitScheme::unit_uniform) x *= 0.2;  // keep the sigmoids out of saturation
    double j = 0.0;
    const Gradients g = loss_gradient(m, x, t, &j);
    CHECK(j == doctest::Approx(oracle::half_mse(m, x, t)).epsilon(1e-12));
    CHECK(loss(m, x, t) == doctest::Approx(j).epsilon(1e-14));
    CHECK(oracle::gradient_check(m, x, t, g) <= 1e-4);
  }
}

TEST_CASE("training") {
  TrainConfig cfg;
  cfg.seed = 3;
  SUBCASE("a single instance reaches its own target") {
    const Matrix x = rows({{0.3, 0.6, 0.8}});
    const auto r = train_encoder(x, x, cfg);
    CHECK((r.final_outputs - x).cwiseAbs().maxCoeff() <= 1e-2);
    CHECK(r.loss_curve.size() == 1000);
  }
  SUBCASE("deterministic and consistent with the forward pass") {
    Rng rng(8);
    const Matrix x = (0.1 + 0.8 * oracle::random_matrix(12, 5, rng).cwiseAbs().cwiseMin(1.0).array()).matrix();
    const Matrix t = x.colwise().mean().replicate(12, 1);
    cfg.init = InitScheme::scaled_uniform;
    const auto a = train_encoder(x, t, cfg);
    const auto b = train_encoder(x, t, cfg);
    CHECK(a.model.w1 == b.model.w1);
    CHECK(a.model.b2 == b.model.b2);
    CHECK(a.loss_curve == b.loss_curve);
    CHECK(age_generalize(a.model, x) == a.final_outputs);
    CHECK((age_forward(a.model, x.row(0).transpose()).transpose() - a.final_outputs.row(0)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(a.final_loss < a.loss_curve.front());
    const auto& c = a.loss_curve;
    for (std::size_t i = c.size() - 100; i + 1 < c.size(); ++i) CHECK(c[i + 1] <= c[i] + 1e-6);
    CHECK(a.final_outputs.minCoeff() > 0.0);
    CHECK(a.final_outputs.maxCoeff() < 1.0);
  }
  SUBCASE("mini-batch mode is deterministic too") {
    Rng rng(9);
    const Matrix x = (0.5 + 0.3 * oracle::random_matrix(10, 3, rng).cwiseMax(-1.0).cwiseMin(1.0).array()).matrix();
    cfg.batch_size = 4;
    cfg.iterations = 50;
    CHECK(train_encoder(x, x, cfg).model.w2 == train_encoder(x, x, cfg).model.w2);
  }
  SUBCASE("divergence is reported") {
    // the squared error against a huge finite target overflows
    const Matrix x = rows({{0.3, 0.6}});
    const Matrix far = rows({{1e200, 0.5}});
    try {
      train_encoder(x, far, cfg);
      FAIL("expected NonFiniteLoss");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonFiniteLoss);
      CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
    }
  }
  SUBCASE("invalid settings") {
    cfg.learning_rate = std::numeric_limits<double>::infinity();
    CHECK(code_of([&] { validate(cfg); }) == ErrorCode::BadConfig);
    cfg.learning_rate = 0.1;
    cfg.momentum = 1.0;
    CHECK(code_of([&] { validate(cfg); }) == ErrorCode::BadConfig);
    cfg.momentum = 0.9;
    cfg.iterations = 0;
    CHECK(code_of([&] { validate(cfg); }) == ErrorCode::BadConfig);
  }
}

TEST_CASE("encoder pair contracts classes toward shared targets") {
  Rng rng(4);
  const Index per = 10;
  Matrix src(2 * per, 3), tgt(2 * per, 3);
  Labels ls, lt;
  for (Index i = 0; i < 2 * per; ++i) {
    const double centre = i < per ? 0.3 : 0.7;
    for (Index j = 0; j < 3; ++j) {
      src(i, j) = centre + 0.08 * rng.normal();
      tgt(i, j) = centre + 0.08 * rng.normal();
    }
    ls.push_back(i < per ? 0 : 1);
    lt.push_back(i < per ? 0 : 1);
  }
  lt[0] = kUnlabeled;
  Matrix pooled(4 * per, 3);
  pooled << src, tgt;
  const RangeScaler s = RangeScaler::fit(pooled);
  const FeatureSet ss{s.transform(src), ls}, st{s.transform(tgt), lt};
  const auto targets = class_targets({src, ls}, {tgt, lt}, s, 2);
  TrainConfig cfg;
  cfg.init = InitScheme::scaled_uniform;
  cfg.seed = 12;
  const EncoderPair pair = age_train(ss, st, targets, cfg);
  CHECK(pair.target.final_outputs.rows() == 2 * per - 1);
  const Matrix gs = age_generalize(pair.source.model, ss.features);
  CHECK(within_class_variance(gs, ls) <= within_class_variance(ss.features, ls));
  const auto again = age_train(ss, st, targets, cfg);
  CHECK(again.source.model.w1 == pair.source.model.w1);
  CHECK(again.target.model.w1 == pair.target.model.w1);
  CHECK(pair.source.model.w1 != pair.target.model.w1);
}

TEST_CASE("within-class variance") {
  const Matrix x = rows({{0, 0}, {2, 0}, {5, 5}, {5, 7}});
  // class 0: mean (1,0), squared distances 1 and 1; class 1: mean (5,6), 1 and 1
  CHECK(within_class_variance(x, {0, 0, 1, 1}) == doctest::Approx(1.0));
  CHECK(within_class_variance(x, {0, 0, kUnlabeled, kUnlabeled}) == doctest::Approx(1.0));
}
