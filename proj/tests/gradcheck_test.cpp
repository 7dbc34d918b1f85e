#include <cmath>

#include "clslu/gradcheck.hpp"
#include "clslu/rng.hpp"
#include "clslu/verify.hpp"
#include "doctest.h"

using namespace clslu;

TEST_CASE("sum of squares checks to quadratic exactness") {
  Rng rng(9);
  Tensor theta = xavier_uniform({8}, rng);
  const std::pair<std::string, Tensor> params[] = {{"theta", theta}};
  ScalarFn f = [&](Graph& g) { return g.mean(g.mul(theta, theta)); };
  GradCheckReport report = finite_diff_check(f, params, 1e-4, 1e-8);
  CHECK(report.entries_checked == 8);
  CHECK(report.max_rel_err < 1e-8);
}

TEST_CASE("non-deterministic objective is rejected") {
  Tensor theta = Tensor::from({2}, {0.5, -0.25}, true);
  ScalarFn f = [&, calls = 0](Graph& g) mutable {
    ++calls;
    return g.mean(g.scale(theta, static_cast<double>(calls)));
  };
  const std::pair<std::string, Tensor> params[] = {{"theta", theta}};
  CHECK_THROWS_AS(finite_diff_check(f, params, 1e-4, 1e-4), Error);
}

TEST_CASE("loss gradient suite passes on the toy batch") {
  // Covers L^lr and L^lvm against finite differences, plus the rest of the
  // objective, on one seed; the acceptance suite sweeps five.
  LossGradCheckSummary summary = check_loss_gradients(17);
  for (const auto& c : summary.checks) {
    INFO(c.loss);
    CHECK(c.report.max_rel_err < 1e-4);
  }
  CHECK(summary.passed);
}
