#include <cmath>
#include <random>

#include "doctest.h"
#include "grad_cases.hpp"
#include "hgba/autodiff.hpp"
#include "hgba/error.hpp"

using namespace hgba;

TEST_CASE("every operation passes the finite-difference check on random inputs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    for (const auto& c : test::op_cases(rng)) {
      CAPTURE(c.name);
      CAPTURE(trial);
      CHECK(grad_check(c.fn, c.params, {.seed = static_cast<std::uint64_t>(trial)}) < 1e-4);
    }
  }
}

TEST_CASE("every model loss passes the finite-difference check") {
  std::mt19937_64 rng(12);
  for (auto arch : {Architecture::Gcn, Architecture::Rgcn, Architecture::Han}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto c = test::model_case(rng, arch);
      CAPTURE(c.name);
      CAPTURE(trial);
      CHECK(grad_check(c.fn, c.params, {.max_coords = 60, .seed = static_cast<std::uint64_t>(trial)}) < 1e-4);
    }
  }
}

TEST_CASE("gradients accumulate over shared uses") {
  Tape t;
  const Var x = t.leaf(DenseMatrix::from_rows({{2.0}}));
  const Var y = ad::add(x, x);
  t.backward(ad::sum_squares(y));
  // d/dx (2x)^2 = 8x
  CHECK(x.grad()(0, 0) == doctest::Approx(16.0));
}

TEST_CASE("constants receive no gradient") {
  Tape t;
  const Var c = t.constant(DenseMatrix::from_rows({{1.0, 2.0}}));
  const Var x = t.leaf(DenseMatrix::from_rows({{3.0, 4.0}}));
  t.backward(ad::sum_squares(ad::add(c, x)));
  CHECK(x.grad()(0, 1) == doctest::Approx(12.0));
  for (double v : c.grad().values()) CHECK(v == 0.0);
}

TEST_CASE("cross entropy matches the closed form") {
  const auto logits = DenseMatrix::from_rows({{0.0, 0.0}, {std::log(3.0), 0.0}});
  const int labels[] = {0, 0};
  const std::uint32_t mask[] = {0, 1};
  CHECK(masked_cross_entropy(logits, labels, mask) == doctest::Approx((std::log(2.0) + std::log(4.0 / 3.0)) / 2.0));
  CHECK_THROWS_AS(masked_cross_entropy(logits, labels, std::span<const std::uint32_t>{}), ValidationError);
}

TEST_CASE("grad_check flags a wrong gradient") {
  // A deliberately broken op: forward x^2, backward pretends the derivative is x.
  const RecordedFn f = [](Tape& t, std::span<const Var> p) {
    const Var x = p[0];
    DenseMatrix v = x.value();
    for (double& e : v.values()) e = e * e;
    const Var parents[] = {x};
    const Var sq = t.record(v, parents, [x](Tape& tape, const DenseMatrix& g) { tape.accumulate(x, g); });
    return ad::sum_squares(sq);
  };
  const DenseMatrix p[] = {DenseMatrix::from_rows({{1.5, -0.5}})};
  CHECK(grad_check(f, p) > 1e-2);
}
