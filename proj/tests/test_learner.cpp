#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "rd/error.hpp"
#include "rd/learner.hpp"
#include "rd/rng.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace rd;
using namespace rd::learner;
using rd::features::FeatureLayout;
using rd::features::Group;
using rd::test::code_of;

namespace {

using Matrix = oracle::Matrix;
using oracle::oracle_ridge;

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

FeatureLayout nonvisual() { return FeatureLayout(0, {Group::NonVisual}); }

// Random dataset whose labels follow a noisy linear rule, clipped to [-1, 1].
Dataset random_dataset(const FeatureLayout& layout, std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  Dataset data(layout);
  std::vector<double> true_w(layout.total_dim());
  for (auto& w : true_w) w = rng.normal() * 0.2;
  std::vector<double> x(layout.total_dim());
  for (std::size_t r = 0; r < rows; ++r) {
    double y = 0.1;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.normal() * (1.0 + static_cast<double>(i % 3)) + static_cast<double>(i % 5);
      y += true_w[i] * (x[i] - static_cast<double>(i % 5));
    }
    y += 0.05 * rng.normal();
    RowMeta m;
    m.label = static_cast<float>(std::clamp(y, -1.0, 1.0));
    m.episode = static_cast<std::uint32_t>(r / 10);
    data.add(x, m);
  }
  return data;
}

Normalizer identity_normalizer(std::size_t d) {
  Normalizer n;
  n.mean.assign(d, 0.0);
  n.std.assign(d, 1.0);
  return n;
}

}  // namespace

TEST_CASE("dataset validation") {
  Dataset d(nonvisual());
  std::vector<double> x(9, 0.0);
  CHECK(code_of([&] { d.add(std::vector<double>(8, 0.0), RowMeta{}); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { d.add(x, RowMeta{1.5f}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { d.add(x, RowMeta{NAN}); }) == ErrorCode::InvalidArgument);
  d.add(x, RowMeta{-1.0f});
  CHECK(d.rows() == 1);
  Dataset other(FeatureLayout(1, {Group::Flow}));
  CHECK(code_of([&] { d.append(other); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("fit_normalizer") {
  Dataset d(nonvisual());
  std::vector<double> a(9, 5.0), b(9, 5.0);
  a[0] = 0.0;
  b[0] = 2.0;
  d.add(a, {});
  CHECK(code_of([&] { fit_normalizer(d); }) == ErrorCode::TooFewRows);
  d.add(b, {});
  const auto n = fit_normalizer(d);
  CHECK(n.mean[0] == 1.0);
  CHECK(n.std[0] == 1.0);
  CHECK(n.mean[3] == 5.0);
  CHECK(n.std[3] == Normalizer::kStdFloor);
  CHECK(n.apply(d.row(0))[3] == 0.0);

  const auto data = random_dataset(nonvisual(), 57, 4);
  const auto m = fit_normalizer(data);
  std::vector<double> sum(9, 0.0), sq(9, 0.0);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto z = m.apply(data.row(r));
    for (std::size_t i = 0; i < 9; ++i) {
      sum[i] += z[i];
      sq[i] += z[i] * z[i];
    }
  }
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(std::abs(sum[i] / 57.0) < 1e-10);
    CHECK(sq[i] / 57.0 == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("build_regularizer") {
  const auto layout = FeatureLayout::full(105);
  const auto r = build_regularizer(layout, 1.0);
  REQUIRE(r.size() == 6099);
  for (const auto& e : layout.entries()) {
    const double expected = e.group == Group::Radon             ? 3150
                            : e.group == Group::StructureTensor ? 1575
                            : e.group == Group::Laws            ? 840
                            : e.group == Group::Flow            ? 525
                                                                : 9;
    for (std::size_t i = e.start; i < e.start + e.length; ++i) REQUIRE(r[i] == expected);
  }
  for (double v : build_regularizer(layout, 0.0)) REQUIRE(v == 0.0);
  const auto single = build_regularizer(FeatureLayout(4, {Group::Laws}), 0.5);
  for (double v : single) CHECK(v == 16.0);
  CHECK(code_of([&] { build_regularizer(layout, -1.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("normal equations: identity design") {
  NormalEquations eq(2);
  eq.add_row(std::vector<double>{1, 0}, 1.0);
  eq.add_row(std::vector<double>{0, 1}, -1.0);
  const auto ols = eq.solve(std::vector<double>{0, 0});
  CHECK(ols[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ols[1] == doctest::Approx(-1.0).epsilon(1e-14));
  const auto ridge = eq.solve(std::vector<double>{1, 1});
  CHECK(ridge[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(ridge[1] == doctest::Approx(-0.5).epsilon(1e-14));

  NormalEquations rank_deficient(2);
  rank_deficient.add_row(std::vector<double>{1, 1}, 1.0);
  rank_deficient.add_row(std::vector<double>{2, 2}, 0.0);
  CHECK(code_of([&] { rank_deficient.solve(std::vector<double>{0, 0}); }) == ErrorCode::SingularSystem);
  CHECK_NOTHROW(rank_deficient.solve(std::vector<double>{0.1, 0.1}));
}

TEST_CASE("solve_ridge on identity design with labels (1, -1)") {
  // Five rows of the 5-dim flow layout: X = I, y = (1, -1, 0, 0, 0), so b = 0.
  Dataset d(FeatureLayout(1, {Group::Flow}));
  const float labels[5] = {1, -1, 0, 0, 0};
  for (int i = 0; i < 5; ++i) {
    std::vector<double> x(5, 0.0);
    x[i] = 1.0;
    d.add(x, RowMeta{labels[i]});
  }
  const auto ols = solve_ridge(d, identity_normalizer(5), std::vector<double>(5, 0.0));
  CHECK(ols.b == 0.0);
  CHECK(ols.w[0] == doctest::Approx(1.0));
  CHECK(ols.w[1] == doctest::Approx(-1.0));
  const auto ridge = solve_ridge(d, identity_normalizer(5), std::vector<double>(5, 1.0));
  CHECK(ridge.w[0] == doctest::Approx(0.5));
  CHECK(ridge.w[1] == doctest::Approx(-0.5));
  CHECK(ridge.w[2] == 0.0);
}

TEST_CASE("ridge matches a dense-inverse oracle") {
  Rng rng(21);
  SUBCASE("random 20x6, R = 0.3") {
    Matrix x(20, std::vector<double>(6));
    std::vector<double> t(20);
    NormalEquations eq(6);
    for (std::size_t n = 0; n < 20; ++n) {
      for (auto& v : x[n]) v = rng.normal();
      t[n] = rng.uniform(-1, 1);
      eq.add_row(x[n], t[n]);
    }
    const std::vector<double> r(6, 0.3);
    const auto w = eq.solve(r);
    const auto expected = oracle_ridge(x, t, r);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(w[i] - expected[i]) < 1e-8);
  }
  SUBCASE("solve_ridge with fitted normalizer and intercept") {
    const auto data = random_dataset(nonvisual(), 30, 8);
    const auto norm_ = fit_normalizer(data);
    const std::vector<double> r(9, 0.3);
    const auto model = solve_ridge(data, norm_, r, 0.3);

    double b = 0;
    for (std::size_t n = 0; n < 30; ++n) b += data.meta(n).label;
    b /= 30.0;
    Matrix x(30, std::vector<double>(9));
    std::vector<double> t(30);
    for (std::size_t n = 0; n < 30; ++n) {
      for (std::size_t i = 0; i < 9; ++i) x[n][i] = (data.row(n)[i] - norm_.mean[i]) / norm_.std[i];
      t[n] = data.meta(n).label - b;
    }
    CHECK(model.b == doctest::Approx(b).epsilon(1e-14));
    const auto expected = oracle_ridge(x, t, r);
    for (std::size_t i = 0; i < 9; ++i) CHECK(std::abs(model.w[i] - expected[i]) < 1e-8);
  }
  SUBCASE("more rows than one accumulation chunk") {
    Matrix x(700, std::vector<double>(5));
    std::vector<double> t(700);
    NormalEquations eq(5);
    for (std::size_t n = 0; n < 700; ++n) {
      for (auto& v : x[n]) v = rng.normal();
      t[n] = rng.normal();
      eq.add_row(x[n], t[n]);
    }
    const std::vector<double> r{0.1, 0.2, 0.3, 0.4, 0.5};
    const auto w = eq.solve(r);
    const auto expected = oracle_ridge(x, t, r);
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(w[i] - expected[i]) < 1e-10);
  }
}

TEST_CASE("ridge first-order optimality") {
  const FeatureLayout layout(3, {Group::Laws, Group::Flow, Group::NonVisual});
  const auto data = random_dataset(layout, 80, 12);
  const auto model = fit(data, all_rows(data), 0.1);
  const auto r = build_regularizer(layout, 0.1);
  const std::size_t d = layout.total_dim();
  std::vector<double> grad(d, 0.0);
  for (std::size_t n = 0; n < data.rows(); ++n) {
    const auto z = model.normalizer.apply(data.row(n));
    double pred = 0;
    for (std::size_t i = 0; i < d; ++i) pred += model.w[i] * z[i];
    const double resid = pred - (data.meta(n).label - model.b);
    for (std::size_t i = 0; i < d; ++i) grad[i] += 2.0 * z[i] * resid;
  }
  for (std::size_t i = 0; i < d; ++i) CHECK(std::abs(grad[i] + 2.0 * r[i] * model.w[i]) < 1e-6);
}

TEST_CASE("shrinkage is monotone in lambda") {
  const FeatureLayout layout(2, {Group::Flow, Group::NonVisual});
  const auto data = random_dataset(layout, 40, 13);
  double prev = INFINITY;
  for (double lambda : {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
    const double n = norm(fit(data, all_rows(data), lambda).w);
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("fit is deterministic and respects row selection") {
  const FeatureLayout layout(2, {Group::Flow, Group::NonVisual});
  const auto data = random_dataset(layout, 40, 14);
  CHECK(fit(data, all_rows(data), 0.1) == fit(data, all_rows(data), 0.1));

  RowSelection first_half;
  Dataset half(layout);
  for (std::size_t i = 0; i < 20; ++i) {
    first_half.push_back(i);
    half.add(std::vector<double>(data.row(i).begin(), data.row(i).end()), data.meta(i));
  }
  const auto a = fit(data, first_half, 0.1);
  const auto b = fit(half, all_rows(half), 0.1);
  CHECK(a.w == b.w);
  CHECK(a.b == b.b);
}

TEST_CASE("predict") {
  const auto layout = nonvisual();
  auto m = constant_model(layout, 0.25);
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(predict(m, x) == 0.25);

  const auto data = random_dataset(layout, 30, 15);
  m = fit(data, all_rows(data), 0.01);
  CHECK(predict(m, m.normalizer.mean) == doctest::Approx(m.b).epsilon(1e-14));

  auto big = constant_model(layout, 0.0);
  big.w[0] = 1.0;
  std::vector<double> three(9, 0.0);
  three[0] = 3.0;
  CHECK(predict_unclipped(big, three) == 3.0);
  CHECK(predict(big, three) == 1.0);
  three[0] = -3.0;
  CHECK(predict(big, three) == -1.0);
  CHECK(code_of([&] { predict(big, std::vector<double>(10, 0.0)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("contributions are additive") {
  const FeatureLayout layout(4, {Group::Laws, Group::Flow, Group::NonVisual});
  const auto data = random_dataset(layout, 60, 16);
  const auto model = fit(data, all_rows(data), 0.05);
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(layout.total_dim());
    for (auto& v : x) v = rng.normal() * 3.0;
    const auto c = contributions(model, x);
    REQUIRE(c.per_entry.size() == layout.entries().size());
    const auto z = model.normalizer.apply(x);
    double dot = model.b;
    for (std::size_t i = 0; i < z.size(); ++i) dot += model.w[i] * z[i];
    double sum = c.intercept;
    for (double v : c.per_entry) sum += v;
    CHECK(std::abs(sum - dot) < 1e-9);
    CHECK(c.unclipped == predict_unclipped(model, x));
    CHECK(predict(model, x) == std::clamp(c.unclipped, -1.0, 1.0));

    const auto totals = c.group_total(layout);
    double group_sum = 0;
    for (double v : totals) group_sum += v;
    CHECK(std::abs(group_sum + c.intercept - c.unclipped) < 1e-9);
    CHECK(totals[static_cast<std::size_t>(Group::Radon)] == 0.0);
  }
  const auto zero = contributions(constant_model(layout, -0.3), std::vector<double>(layout.total_dim(), 1.0));
  for (double v : zero.per_entry) CHECK(v == 0.0);
  CHECK(zero.intercept == -0.3);
  CHECK(zero.unclipped == -0.3);
}

TEST_CASE("imitation_loss") {
  const auto layout = nonvisual();
  Dataset ones(layout);
  for (int i = 0; i < 4; ++i) ones.add(std::vector<double>(9, i), RowMeta{1.0f});
  CHECK(imitation_loss(constant_model(layout, 1.0), ones) == 0.0);
  CHECK(imitation_loss(constant_model(layout, 0.0), ones) == 1.0);
  CHECK(code_of([&] { imitation_loss(constant_model(layout, 0.0), Dataset(layout)); }) ==
        ErrorCode::EmptyHoldout);

  const auto data = random_dataset(layout, 25, 18);
  const auto model = fit(data, all_rows(data), 0.5);
  double expected = 0;
  for (std::size_t n = 0; n < 25; ++n) {
    const auto z = model.normalizer.apply(data.row(n));
    double p = model.b;
    for (std::size_t i = 0; i < 9; ++i) p += model.w[i] * z[i];
    p = std::clamp(p, -1.0, 1.0);
    expected += (p - data.meta(n).label) * (p - data.meta(n).label);
  }
  expected /= 25.0;
  CHECK(std::abs(imitation_loss(model, data) - expected) < 1e-12);
}

TEST_CASE("project keeps selected groups") {
  const FeatureLayout layout(3, {Group::Laws, Group::Flow, Group::NonVisual});
  const auto data = random_dataset(layout, 5, 19);
  const auto p = data.project({Group::Flow, Group::NonVisual});
  CHECK(p.dim() == 3 * 5 + 9);
  CHECK(p.rows() == 5);
  for (std::size_t r = 0; r < 5; ++r) {
    for (int w = 0; w < 3; ++w) {
      const auto* src = layout.find(Group::Flow, w);
      const auto* dst = p.layout().find(Group::Flow, w);
      for (std::size_t i = 0; i < 5; ++i) REQUIRE(p.row(r)[dst->start + i] == data.row(r)[src->start + i]);
    }
    CHECK(p.meta(r) == data.meta(r));
  }
}

TEST_CASE("model and dataset files round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "rd_test_learner";
  std::filesystem::create_directories(dir);
  const FeatureLayout layout(2, {Group::StructureTensor, Group::Flow, Group::NonVisual});
  auto data = random_dataset(layout, 33, 20);
  const auto model = fit(data, all_rows(data), 0.1);
  save_model(dir / "m.json", model);
  CHECK(load_model(dir / "m.json") == model);
  CHECK(layout_from_json(layout_to_json(layout)) == layout);

  save_dataset(dir / "d.bin", data);
  CHECK(std::filesystem::file_size(dir / "d.bin") == 16 + 33 * (layout.total_dim() * 4 + 4 + 2 + 4 + 1));
  CHECK(load_dataset(dir / "d.bin", layout) == data);
  CHECK(code_of([&] { load_dataset(dir / "d.bin", nonvisual()); }) == ErrorCode::DimensionMismatch);

  std::ofstream(dir / "bad.bin") << "XXXX";
  CHECK(code_of([&] { load_dataset(dir / "bad.bin", layout); }) == ErrorCode::FormatError);
  std::ofstream(dir / "bad.json") << "{";
  CHECK(code_of([&] { load_model(dir / "bad.json"); }) == ErrorCode::FormatError);
  std::filesystem::remove_all(dir);
}
