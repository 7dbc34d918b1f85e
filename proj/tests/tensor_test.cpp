#include <cmath>
#include <numbers>
#include <vector>

#include "clslu/gradcheck.hpp"
#include "clslu/rng.hpp"
#include "clslu/tensor.hpp"
#include "doctest.h"

using namespace clslu;

TEST_CASE("softmax hand values") {
  Graph g;
  Tensor x = Tensor::from({2}, {0.0, 0.0});
  Tensor y = g.softmax(x);
  CHECK(y[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(0.5).epsilon(1e-12));

  Tensor x2 = Tensor::from({2}, {std::log(2.0), 0.0});
  Tensor y2 = g.softmax(x2);
  CHECK(y2[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(y2[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(11);
  Graph g;
  std::vector<double> vals(15);
  for (auto& v : vals) v = 10.0 * (rng.uniform() - 0.5);
  Tensor x = Tensor::from({3, 5}, vals);
  Tensor y = g.softmax(x);
  for (int r = 0; r < 3; ++r) {
    double sum = 0.0;
    for (int c = 0; c < 5; ++c) sum += y[r * 5 + c];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(g.softmax(Tensor::from({1}, {std::nan("")})), Error);
}

TEST_CASE("cosine hand values and range") {
  Graph g;
  CHECK(g.cosine(Tensor::from({2}, {1, 2}), Tensor::from({2}, {2, 4})).item() ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.cosine(Tensor::from({2}, {3, 4}), Tensor::from({2}, {4, 3})).item() ==
        doctest::Approx(0.96).epsilon(1e-12));

  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(4), b(4);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    const double c = g.cosine(Tensor::from({4}, a), Tensor::from({4}, b)).item();
    CHECK(c <= 1.0 + 1e-9);
    CHECK(c >= -1.0 - 1e-9);
  }
}

TEST_CASE("cosine zero-norm counts a warning and cuts the gradient") {
  Graph g;
  Tensor a = Tensor::from({2}, {0.0, 0.0}, true);
  Tensor b = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor c = g.cosine(a, b);
  CHECK(c.item() == 0.0);
  CHECK(g.zero_norm_cosine_count() == 1);
  CHECK_FALSE(c.requires_grad());
}

TEST_CASE("d/dx (x*x) at 3 is 6") {
  Graph g;
  Tensor x = Tensor::from({1}, {3.0}, true);
  Tensor y = g.mul(x, x);
  g.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("softmax jacobian at uniform input, K=2") {
  // Row of d(softmax_0)/dx is [p0(1-p0), -p0 p1] = [0.25, -0.25].
  Graph g;
  Tensor x = Tensor::from({2}, {0.0, 0.0}, true);
  Tensor p = g.softmax(x);
  Tensor p0 = g.slice(p, 0, 1);
  g.backward(p0);
  CHECK(x.grad()[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(x.grad()[1] == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("gradient of MSE(a,a) is zero") {
  Graph g;
  Tensor a = Tensor::from({3}, {1.0, -2.0, 0.5}, true);
  Tensor loss = g.mse(a, a);
  CHECK(loss.item() == 0.0);
  g.backward(loss);
  for (double v : a.grad()) CHECK(v == 0.0);
}

TEST_CASE("backward contracts") {
  Graph g;
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor y = g.mul(x, x);

  SUBCASE("non-scalar root") { CHECK_THROWS_AS(g.backward(y), ShapeError); }
  SUBCASE("detached root") {
    CHECK_THROWS_AS(g.backward(x), Error);                // leaf
    CHECK_THROWS_AS(g.backward(g.detach(g.mean(y))), Error);  // detached copy
  }
  SUBCASE("double backward forbidden until reset") {
    Tensor m = g.mean(y);
    g.backward(m);
    CHECK_THROWS_AS(g.backward(m), Error);
    g.reset();
    Tensor m2 = g.mean(g.mul(x, x));
    CHECK_NOTHROW(g.backward(m2));
  }
  SUBCASE("foreign graph root") {
    Graph g2;
    Tensor other = g2.mean(g2.mul(x, x));
    CHECK_THROWS_AS(g.backward(other), Error);
  }
}

TEST_CASE("gradient accumulation is additive and caller-reset") {
  Tensor x = Tensor::from({1}, {2.0}, true);
  {
    Graph g;
    g.backward(g.mul(x, x));
  }
  CHECK(x.grad()[0] == doctest::Approx(4.0));
  {
    Graph g;
    g.backward(g.mul(x, x));
  }
  CHECK(x.grad()[0] == doctest::Approx(8.0));  // accumulated
  x.zero_grad();
  CHECK_FALSE(x.has_grad());
}

TEST_CASE("requires_grad=false tensors never accumulate gradient") {
  Graph g;
  Tensor frozen = Tensor::from({2}, {1.0, 2.0});
  Tensor live = Tensor::from({2}, {3.0, 4.0}, true);
  Tensor loss = g.mean(g.mul(frozen, live));
  g.backward(loss);
  CHECK_FALSE(frozen.has_grad());
  CHECK(live.has_grad());
}

TEST_CASE("shape errors name the op and both shapes") {
  Graph g;
  try {
    g.add(Tensor::zeros({2}), Tensor::zeros({3}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("add") != std::string::npos);
    CHECK(msg.find("{2}") != std::string::npos);
    CHECK(msg.find("{3}") != std::string::npos);
  }
  CHECK_THROWS_AS(g.matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST_CASE("dropout: eval identity, train inverted scaling") {
  Graph g;
  Rng rng(5);
  Tensor x = Tensor::from({4}, {1.0, 2.0, 3.0, 4.0}, true);
  Tensor eval_out = g.dropout(x, 0.5, false, rng);
  CHECK(eval_out.same_data(x));

  // Kept units are scaled by 1/(1-p); over many draws the mean is unbiased.
  double sum = 0.0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    Tensor one = Tensor::from({1}, {1.0});
    sum += g.dropout(one, 0.25, true, rng)[0];
  }
  CHECK(sum / trials == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("matmul shapes and values") {
  Graph g;
  Tensor m = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor v = Tensor::from({3}, {1, 0, -1});
  Tensor mv = g.matmul(m, v);
  REQUIRE(mv.shape() == Shape{2});
  CHECK(mv[0] == doctest::Approx(-2.0));
  CHECK(mv[1] == doctest::Approx(-2.0));

  Tensor r = Tensor::from({2}, {1, 1});
  Tensor rm = g.matmul(r, m);
  REQUIRE(rm.shape() == Shape{3});
  CHECK(rm[0] == doctest::Approx(5.0));
  CHECK(rm[2] == doctest::Approx(9.0));

  Tensor mm = g.matmul(m, Tensor::from({3, 2}, {1, 0, 0, 1, 1, 1}));
  REQUIRE(mm.shape() == (Shape{2, 2}));
  CHECK(mm[0] == doctest::Approx(4.0));
  CHECK(mm[3] == doctest::Approx(11.0));
}

TEST_CASE("gaussian_sample") {
  SUBCASE("clamped variance path returns exactly mu") {
    Graph g;
    Rng rng(1);
    Tensor mu = Tensor::from({3}, {0.5, -1.0, 2.0}, true);
    Tensor lv = Tensor::full({3}, -1e9, true);
    Tensor z = g.gaussian_sample(mu, lv, rng);
    for (int i = 0; i < 3; ++i) CHECK(z[i] == mu[i]);
  }
  SUBCASE("fixed seed gives identical draws") {
    Tensor mu = Tensor::zeros({5});
    Tensor lv = Tensor::zeros({5});
    Graph g1, g2;
    Rng r1(42), r2(42);
    Tensor z1 = g1.gaussian_sample(mu, lv, r1);
    Tensor z2 = g2.gaussian_sample(mu, lv, r2);
    for (int i = 0; i < 5; ++i) CHECK(z1[i] == z2[i]);
  }
  SUBCASE("sample mean of 10000 draws, mu=1 sigma=1") {
    Graph g;
    Rng rng(7);
    Tensor mu = Tensor::full({1}, 1.0);
    Tensor lv = Tensor::zeros({1});
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) sum += g.gaussian_sample(mu, lv, rng)[0];
    const double mean = sum / 10000.0;
    CHECK(mean > 0.97);
    CHECK(mean < 1.03);
  }
  SUBCASE("gradients flow to mu and log_var") {
    Graph g;
    Rng rng(3);
    Tensor mu = Tensor::zeros({4}, true);
    Tensor lv = Tensor::zeros({4}, true);
    Tensor z = g.gaussian_sample(mu, lv, rng);
    g.backward(g.mean(g.mul(z, z)));
    CHECK(mu.has_grad());
    CHECK(lv.has_grad());
  }
}

TEST_CASE("fixed seed makes forward and backward bit-identical") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    Tensor w = xavier_uniform({4, 3}, rng);
    Tensor x = Tensor::from({3}, {0.3, -0.2, 0.9});
    Graph g;
    Tensor h = g.tanh(g.matmul(w, x));
    Tensor hd = g.dropout(h, 0.2, true, rng);
    Tensor z = g.gaussian_sample(hd, h, rng);
    Tensor loss = g.mean(g.mul(z, z));
    g.backward(loss);
    std::vector<double> out(w.grad().begin(), w.grad().end());
    out.push_back(loss.item());
    return out;
  };
  const auto a = run(123);
  const auto b = run(123);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("every op matches central finite differences across seeds") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Rng init(seed);
    Tensor a = xavier_uniform({6}, init);
    Tensor b = xavier_uniform({6}, init);
    Tensor m = xavier_uniform({4, 6}, init);
    Tensor n = xavier_uniform({6, 3}, init);
    const std::pair<std::string, Tensor> params[] = {{"a", a}, {"b", b}, {"m", m}, {"n", n}};
    const uint64_t draw_seed = seed * 977;

    ScalarFn f = [&, draw_seed](Graph& g) {
      Rng rng(draw_seed);
      Tensor s1 = g.tanh(g.matmul(m, a));                      // matmul 2Dx1D, tanh
      Tensor s2 = g.sigmoid(g.matmul(b, n));                   // matmul 1Dx2D, sigmoid
      Tensor c = g.concat(std::vector<Tensor>{s1, s2});        // concat
      Tensor sm = g.softmax(c);                                // softmax
      Tensor sl = g.slice(sm, 1, 4);                           // slice
      Tensor st = g.stack(std::vector<Tensor>{sl, sl});        // stack
      Tensor r0 = g.row(st, 0);                                // row
      Tensor d = g.dropout(r0, 0.25, true, rng);               // dropout
      Tensor e = g.exp(g.scale(d, 0.5));                       // exp, scale
      Tensor lg = g.log(g.add(e, Tensor::full({4}, 1.0)));     // log, add
      Tensor mu = g.mul(lg, g.slice(a, 0, 4));                 // mul
      Tensor z = g.gaussian_sample(mu, g.slice(b, 1, 4), rng); // reparameterized draw
      Tensor cs = g.cosine(z, g.slice(a, 2, 4));               // cosine
      Tensor nl = g.nll_onehot(g.softmax(z), 2);               // nll
      Tensor ms = g.mse(z, g.slice(b, 2, 4));                  // mse
      Tensor dt = g.dot(z, g.slice(a, 1, 4));                  // dot
      const Tensor terms[] = {g.mean(z), cs, nl, ms, dt};
      return g.mean(g.concat(terms));
    };
    GradCheckReport report = finite_diff_check(f, params, 1e-4, 1e-4);
    INFO("seed ", seed, " worst ", report.worst.param, "[", report.worst.index,
         "] ad=", report.worst.autodiff, " fd=", report.worst.fd);
    CHECK(report.max_rel_err < 1e-4);
  }
}
