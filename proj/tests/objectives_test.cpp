#include <cmath>

#include "clslu/objectives.hpp"
#include "doctest.h"

using namespace clslu;

namespace {

// A unit vector at the given cosine to [1, 0].
Tensor at_cosine(double c) {
  return Tensor::from({2}, {c, std::sqrt(1.0 - c * c)});
}

}  // namespace

TEST_CASE("label regularization identities") {
  Graph g;
  SUBCASE("identical pairs give zero") {
    Tensor u = Tensor::from({3}, {0.4, -0.1, 0.9});
    Tensor l = Tensor::from({2}, {1.0, 2.0});
    const double loss = label_regularization(g, u, u, l, l).item();
    CHECK(std::abs(loss) < 1e-30);
  }
  SUBCASE("opposite cosines give (1 - (-1))^2 = 4") {
    Tensor u = Tensor::from({2}, {1.0, 0.0});
    Tensor la = Tensor::from({2}, {1.0, 0.0});
    Tensor lb = Tensor::from({2}, {-1.0, 0.0});
    CHECK(label_regularization(g, u, u, la, lb).item() == doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("cos 0.5 vs cos 0.3 gives 0.04") {
    Tensor e0 = Tensor::from({2}, {1.0, 0.0});
    CHECK(label_regularization(g, e0, at_cosine(0.5), e0, at_cosine(0.3)).item() ==
          doctest::Approx(0.04).epsilon(1e-9));
  }
}

TEST_CASE("label regularization is symmetric bit for bit") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> ua(5), ub(5), la(4), lb(4);
    for (auto* v : {&ua, &ub})
      for (auto& x : *v) x = rng.normal();
    for (auto* v : {&la, &lb})
      for (auto& x : *v) x = rng.normal();
    Graph g;
    Tensor tua = Tensor::from({5}, ua), tub = Tensor::from({5}, ub);
    Tensor tla = Tensor::from({4}, la), tlb = Tensor::from({4}, lb);
    const double fwd = label_regularization(g, tua, tub, tla, tlb).item();
    const double rev = label_regularization(g, tub, tua, tlb, tla).item();
    CHECK(fwd == rev);
  }
}

TEST_CASE("adversarial fc loss") {
  Rng rng(32);
  FcParams fc = init_fc_params(3, 2, rng);

  SUBCASE("uniform output is exactly zero") {
    for (auto& v : fc.w.mutable_values()) v = 0.0;
    for (auto& v : fc.b.mutable_values()) v = 0.0;
    Graph g;
    const Tensor zs[] = {Tensor::from({3}, {1.0, -1.0, 0.5}, true)};
    CHECK(adversarial_fc_loss(g, zs, fc, 2).item() == 0.0);
  }
  SUBCASE("K=2 degenerate distribution scores 0.25 under per-vector mean") {
    // Drive the softmax to [~1, ~0] with a huge bias gap.
    for (auto& v : fc.w.mutable_values()) v = 0.0;
    fc.b.mutable_values()[0] = 60.0;
    fc.b.mutable_values()[1] = -60.0;
    Graph g;
    const Tensor zs[] = {Tensor::from({3}, {0.0, 0.0, 0.0}, true)};
    CHECK(adversarial_fc_loss(g, zs, fc, 2).item() == doctest::Approx(0.25).epsilon(1e-9));
  }
  SUBCASE("permutation of tokens leaves the loss unchanged") {
    Rng vals(33);
    std::vector<Tensor> zs;
    for (int i = 0; i < 6; ++i) zs.push_back(xavier_uniform({3}, vals));
    Graph g;
    const double fwd = adversarial_fc_loss(g, zs, fc, 2).item();
    std::reverse(zs.begin(), zs.end());
    const double rev = adversarial_fc_loss(g, zs, fc, 2).item();
    CHECK(fwd == doctest::Approx(rev).epsilon(1e-12));
  }
  SUBCASE("only the FC head receives gradient") {
    Graph g;
    Tensor z = xavier_uniform({3}, rng);
    const Tensor zs[] = {z};
    Tensor loss = adversarial_fc_loss(g, zs, fc, 2);
    g.backward(loss);
    CHECK(fc.w.has_grad());
    CHECK(fc.b.has_grad());
    CHECK_FALSE(z.has_grad());
  }
}

TEST_CASE("adversarial lvm loss") {
  Rng rng(34);
  FcParams fc = init_fc_params(3, 2, rng);

  SUBCASE("uniform prediction vs one-hot scores 0.25") {
    for (auto& v : fc.w.mutable_values()) v = 0.0;
    for (auto& v : fc.b.mutable_values()) v = 0.0;
    Graph g;
    const Tensor zs[] = {xavier_uniform({3}, rng)};
    const int64_t targets[] = {0};
    CHECK(adversarial_lvm_loss(g, zs, targets, fc, 2).item() ==
          doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("prediction equal to the target gives zero") {
    Graph g;
    Tensor p = Tensor::from({2}, {1.0, 0.0});
    Tensor y = Tensor::from({2}, {1.0, 0.0});
    CHECK(g.mse(p, y).item() == 0.0);
  }
  SUBCASE("gradient is structurally zero on FC parameters") {
    Graph g;
    Tensor z = xavier_uniform({3}, rng);
    const Tensor zs[] = {z};
    const int64_t targets[] = {1};
    Tensor loss = adversarial_lvm_loss(g, zs, targets, fc, 2);
    g.backward(loss);
    CHECK_FALSE(fc.w.has_grad());
    CHECK_FALSE(fc.b.has_grad());
    CHECK(z.has_grad());
  }
}

TEST_CASE("gradient routing matches isolated backward passes exactly") {
  // One shared forward; total's gradients on each group must equal the
  // gradients of the group's own loss computed in isolation.
  Rng rng(35);
  FcParams fc = init_fc_params(3, 4, rng);
  Tensor w_gen = xavier_uniform({3, 2}, rng);  // a stand-in latent generator
  Tensor input = Tensor::from({2}, {0.7, -0.4});
  const int64_t targets[] = {2, 0};

  auto forward = [&](Graph& g, bool with_fc, bool with_lvm) {
    std::vector<Tensor> zs = {g.matmul(w_gen, input), g.tanh(g.matmul(w_gen, input))};
    Tensor loss = Tensor::scalar(0.0);
    if (with_fc) loss = g.add(loss, adversarial_fc_loss(g, zs, fc, 4));
    if (with_lvm) loss = g.add(loss, adversarial_lvm_loss(g, zs, targets, fc, 4));
    return loss;
  };

  std::vector<double> fc_from_total, gen_from_total;
  {
    Graph g;
    g.backward(forward(g, true, true));
    fc_from_total.assign(fc.w.grad().begin(), fc.w.grad().end());
    gen_from_total.assign(w_gen.grad().begin(), w_gen.grad().end());
    fc.w.zero_grad();
    fc.b.zero_grad();
    w_gen.zero_grad();
  }
  {
    Graph g;
    g.backward(forward(g, true, false));  // fc loss alone
    REQUIRE(fc.w.has_grad());
    CHECK_FALSE(w_gen.has_grad());
    for (size_t i = 0; i < fc_from_total.size(); ++i) CHECK(fc.w.grad()[i] == fc_from_total[i]);
    fc.w.zero_grad();
    fc.b.zero_grad();
  }
  {
    Graph g;
    g.backward(forward(g, false, true));  // lvm loss alone
    REQUIRE(w_gen.has_grad());
    CHECK_FALSE(fc.w.has_grad());
    for (size_t i = 0; i < gen_from_total.size(); ++i)
      CHECK(w_gen.grad()[i] == gen_from_total[i]);
  }
}

TEST_CASE("task losses") {
  Rng rng(36);
  LvmParams lvm = init_lvm_params(4, 3, 11, 2, rng);
  Graph g;

  SUBCASE("uniform prediction over 11 slots costs ln 11 per token") {
    for (auto& v : lvm.w_slot_proj.mutable_values()) v = 0.0;
    std::vector<Tensor> hidden = {xavier_uniform({4}, rng), xavier_uniform({4}, rng)};
    Tensor pooled = xavier_uniform({4}, rng);
    Rng fwd(37);
    LatentPrediction pred = lvm_forward(g, hidden, pooled, lvm, LvmMode::infer, fwd);
    const int64_t targets[] = {3, 7};
    auto [l_slot, l_intent] = task_losses(g, pred, targets, 1);
    CHECK(l_slot.item() == doctest::Approx(std::log(11.0)).epsilon(1e-9));
  }
  SUBCASE("perfect and half-confidence predictions") {
    Tensor perfect = Tensor::from({2}, {1.0, 0.0});
    CHECK(g.nll_onehot(perfect, 0).item() == 0.0);
    Tensor half = Tensor::from({2}, {0.5, 0.5});
    CHECK(g.nll_onehot(half, 0).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("schedule") {
  Schedule lin{Schedule::Decay::linear, 11, 0.9};
  CHECK(lin.alpha(0) == 1.0);
  CHECK(lin.alpha(1) == 1.0);
  CHECK(lin.beta(0) == 1.0);
  // alpha = max(0, 1 - (epoch-1)/(E-1)) beyond the warm-up
  CHECK(lin.alpha(2) == doctest::Approx(1.0 - 1.0 / 10.0));
  CHECK(lin.alpha(6) == doctest::Approx(0.5));
  CHECK(lin.alpha(11) == doctest::Approx(0.0));
  for (int64_t e = 1; e < 14; ++e) {
    CHECK(lin.alpha(e) <= lin.alpha(e - 1) + 1e-15);
    CHECK(lin.beta(e) == 1.0);
  }
  Schedule expo{Schedule::Decay::exponential, 11, 0.9};
  CHECK(expo.alpha(1) == 1.0);
  CHECK(expo.alpha(2) == doctest::Approx(0.9));
  CHECK(expo.alpha(3) == doctest::Approx(0.81));
  for (int64_t e = 1; e < 14; ++e) CHECK(expo.alpha(e) <= expo.alpha(e - 1) + 1e-15);
}

TEST_CASE("total loss combines parts under the schedule") {
  Graph g;
  LossParts parts{Tensor::scalar(1.0), Tensor::scalar(1.0), Tensor::scalar(1.0),
                  Tensor::scalar(1.0), Tensor::scalar(1.0)};
  Schedule sched{Schedule::Decay::linear, 10, 0.9};
  TotalLoss t = total_loss(g, parts, sched, 0);
  CHECK(t.report.alpha == 1.0);
  CHECK(t.report.beta == 1.0);
  CHECK(t.report.total == doctest::Approx(5.0).epsilon(1e-12));

  LossParts mixed{Tensor::scalar(0.5), Tensor::scalar(0.25), Tensor::scalar(0.125),
                  Tensor::scalar(2.0), Tensor::scalar(4.0)};
  TotalLoss t2 = total_loss(g, mixed, sched, 5);
  const double expect = 0.5 + 0.25 + 0.125 + t2.report.alpha * 2.0 + t2.report.beta * 4.0;
  CHECK(t2.report.total == doctest::Approx(expect).epsilon(1e-9));
  CHECK(t2.report.alpha < 1.0);
  // All parts are non-negative by construction in the model; the report
  // just echoes them.
  for (double v : {t2.report.l_slot, t2.report.l_intent, t2.report.l_lr, t2.report.l_fc,
                   t2.report.l_lvm})
    CHECK(v >= 0.0);
}
