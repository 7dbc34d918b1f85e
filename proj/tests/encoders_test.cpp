#include <cmath>

#include "clslu/encoders.hpp"
#include "clslu/gradcheck.hpp"
#include "doctest.h"

using namespace clslu;

namespace {

EmbeddingTable small_table() {
  EmbeddingTable t(4);
  Rng rng(100);
  for (const char* w : {"wake", "me", "at", "seven", "am", "now"}) {
    std::vector<double> v(4);
    for (auto& x : v) x = rng.normal();
    t.insert(w, std::move(v));
  }
  return t;
}

EncoderDims small_dims() {
  EncoderDims d;
  d.utter_hidden = 5;
  d.utter_layers = 2;
  d.label_emb = 3;
  d.label_hidden = 4;
  d.dropout = 0.1;
  return d;
}

}  // namespace

TEST_CASE("singleton attention weight is exactly one") {
  Rng rng(1);
  EncoderParams p = init_encoder_params(small_dims(), 4, 5, rng);
  EmbeddingTable table = small_table();
  Graph g;
  Rng fwd(2);
  EncodedPair enc = encode_utterance(g, {"wake"}, table, p.utterance, false, fwd);
  REQUIRE(enc.attention.shape() == Shape{1});
  CHECK(enc.attention[0] == 1.0);
  CHECK(enc.pooled.shape() == Shape{10});
  CHECK(enc.hidden_matrix.shape() == (Shape{1, 10}));

  Graph g2;
  EncodedPair lab = encode_labels(g2, {2}, p.label);
  CHECK(lab.attention[0] == 1.0);
  CHECK(lab.pooled.shape() == Shape{8});
}

TEST_CASE("equal attention scores give uniform weights") {
  Rng rng(1);
  EncoderParams p = init_encoder_params(small_dims(), 4, 5, rng);
  // Zero attention vector makes every score equal, so the softmax is 1/n.
  for (auto& v : p.utterance.attention_v.mutable_values()) v = 0.0;
  EmbeddingTable table = small_table();
  Graph g;
  Rng fwd(2);
  EncodedPair enc = encode_utterance(g, {"me", "me", "me", "me"}, table, p.utterance,
                                     false, fwd);
  for (int i = 0; i < 4; ++i) CHECK(enc.attention[i] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("all-zero weights collapse every hidden state to zero") {
  Rng rng(1);
  EncoderParams p = init_encoder_params(small_dims(), 4, 5, rng);
  for (auto* dir : {&p.utterance.bilstm.fwd, &p.utterance.bilstm.bwd})
    for (auto& layer : *dir) {
      for (auto& v : layer.w_x.mutable_values()) v = 0.0;
      for (auto& v : layer.w_h.mutable_values()) v = 0.0;
      for (auto& v : layer.b.mutable_values()) v = 0.0;
    }
  EmbeddingTable table = small_table();
  Graph g;
  Rng fwd(2);
  EncodedPair enc = encode_utterance(g, {"wake", "me", "now"}, table, p.utterance, false, fwd);
  for (const auto& h : enc.hidden)
    for (double v : h.values()) CHECK(v == 0.0);
}

TEST_CASE("pooled equals the attention-weighted sum of hidden states") {
  Rng rng(4);
  EncoderParams p = init_encoder_params(small_dims(), 4, 5, rng);
  EmbeddingTable table = small_table();
  Graph g;
  Rng fwd(5);
  EncodedPair enc =
      encode_utterance(g, {"wake", "me", "at", "seven"}, table, p.utterance, false, fwd);
  std::vector<double> expected(10, 0.0);
  for (size_t t = 0; t < enc.hidden.size(); ++t)
    for (int d = 0; d < 10; ++d) expected[d] += enc.attention[t] * enc.hidden[t][d];
  for (int d = 0; d < 10; ++d)
    CHECK(enc.pooled[d] == doctest::Approx(expected[d]).epsilon(1e-9));
}

TEST_CASE("BiLSTM is order sensitive") {
  Rng rng(6);
  EncoderParams p = init_encoder_params(small_dims(), 4, 5, rng);
  EmbeddingTable table = small_table();
  Graph g;
  Rng fwd(7);
  EncodedPair a = encode_utterance(g, {"wake", "me", "at"}, table, p.utterance, false, fwd);
  EncodedPair b = encode_utterance(g, {"at", "me", "wake"}, table, p.utterance, false, fwd);
  bool any_diff = false;
  for (int d = 0; d < 10; ++d)
    if (a.hidden[1][d] != b.hidden[1][d]) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("eval mode is deterministic and rng-independent") {
  Rng rng(8);
  EncoderParams p = init_encoder_params(small_dims(), 4, 5, rng);
  EmbeddingTable table = small_table();
  Graph g;
  Rng fwd1(1), fwd2(999);
  EncodedPair a = encode_utterance(g, {"wake", "me"}, table, p.utterance, false, fwd1);
  EncodedPair b = encode_utterance(g, {"wake", "me"}, table, p.utterance, false, fwd2);
  for (int d = 0; d < 10; ++d) CHECK(a.pooled[d] == b.pooled[d]);
  // Train mode does consume randomness (dropout) and differs across seeds.
  EncodedPair c = encode_utterance(g, {"wake", "me"}, table, p.utterance, true, fwd1);
  bool any_diff = false;
  for (int d = 0; d < 10; ++d)
    if (a.pooled[d] != c.pooled[d]) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("label encoder repeats bit-exactly and routes gradients to used rows") {
  Rng rng(9);
  EncoderParams p = init_encoder_params(small_dims(), 4, 5, rng);
  Graph g;
  EncodedPair a = encode_labels(g, {0, 2, 2}, p.label);
  EncodedPair b = encode_labels(g, {0, 2, 2}, p.label);
  for (int d = 0; d < 8; ++d) CHECK(a.pooled[d] == b.pooled[d]);

  g.backward(g.mean(a.pooled));
  REQUIRE(p.label.embeddings.has_grad());
  auto grad = p.label.embeddings.grad();
  auto row_nonzero = [&](int64_t r) {
    for (int64_t c = 0; c < 3; ++c)
      if (grad[static_cast<size_t>(r * 3 + c)] != 0.0) return true;
    return false;
  };
  CHECK(row_nonzero(0));
  CHECK(row_nonzero(2));
  CHECK_FALSE(row_nonzero(1));  // unused label
  CHECK_FALSE(row_nonzero(3));
  CHECK_THROWS_AS(encode_labels(g, {7}, p.label), Error);
}

TEST_CASE("empty inputs are rejected") {
  Rng rng(10);
  EncoderParams p = init_encoder_params(small_dims(), 4, 5, rng);
  EmbeddingTable table = small_table();
  Graph g;
  Rng fwd(1);
  CHECK_THROWS_AS(encode_utterance(g, {}, table, p.utterance, false, fwd), Error);
  CHECK_THROWS_AS(encode_labels(g, {}, p.label), Error);
}

TEST_CASE("encoder parameters pass finite differences on a 3-token input") {
  Rng rng(12);
  EncoderDims dims;
  dims.utter_hidden = 3;
  dims.utter_layers = 2;
  dims.label_emb = 3;
  dims.label_hidden = 2;
  dims.dropout = 0.1;
  EncoderParams p = init_encoder_params(dims, 4, 5, rng);
  EmbeddingTable table = small_table();

  std::vector<std::pair<std::string, Tensor>> params;
  for (size_t l = 0; l < p.utterance.bilstm.fwd.size(); ++l) {
    for (auto* dir : {&p.utterance.bilstm.fwd, &p.utterance.bilstm.bwd}) {
      params.emplace_back("w_x", (*dir)[l].w_x);
      params.emplace_back("w_h", (*dir)[l].w_h);
      params.emplace_back("b", (*dir)[l].b);
    }
  }
  params.emplace_back("attn_v", p.utterance.attention_v);
  params.emplace_back("label_emb", p.label.embeddings);
  for (auto* dir : {&p.label.bilstm.fwd, &p.label.bilstm.bwd}) {
    params.emplace_back("lw_x", (*dir)[0].w_x);
    params.emplace_back("lw_h", (*dir)[0].w_h);
    params.emplace_back("lb", (*dir)[0].b);
  }
  params.emplace_back("lattn_v", p.label.attention_v);

  // d(pooled . const)/d(params) for both encoders, dropout active.
  ScalarFn f = [&](Graph& g) {
    Rng fwd(77);
    EncodedPair u = encode_utterance(g, {"wake", "me", "now"}, table, p.utterance, true, fwd);
    EncodedPair l = encode_labels(g, {1, 0, 3}, p.label);
    Tensor cu = Tensor::from({6}, {0.3, -0.2, 0.7, 0.1, -0.5, 0.4});
    Tensor cl = Tensor::from({4}, {0.6, -0.1, 0.2, -0.3});
    return g.add(g.dot(u.pooled, cu), g.dot(l.pooled, cl));
  };
  GradCheckReport report = finite_diff_check(f, params, 1e-4, 1e-4);
  CHECK(report.max_rel_err < 1e-4);
}
