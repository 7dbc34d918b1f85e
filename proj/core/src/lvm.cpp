#include "clslu/lvm.hpp"

namespace clslu {

LvmParams init_lvm_params(int64_t hidden2, int64_t latent, int64_t num_slots,
                          int64_t num_intents, Rng& rng) {
  LvmParams p;
  p.latent = latent;
  p.w_slot = xavier_uniform({2 * latent, hidden2}, rng);
  p.w_intent = xavier_uniform({2 * latent, hidden2}, rng);
  p.w_slot_proj = xavier_uniform({num_slots, latent}, rng);
  p.w_intent_proj = xavier_uniform({num_intents, latent}, rng);
  return p;
}

FcParams init_fc_params(int64_t latent, int64_t num_slots, Rng& rng) {
  FcParams p;
  p.w = xavier_uniform({num_slots, latent}, rng);
  p.b = Tensor::zeros({num_slots}, true);
  return p;
}

namespace {

struct Latent {
  Tensor mu, log_var, z;
};

Latent latent_head(Graph& g, const Tensor& input, const Tensor& w, int64_t latent,
                   LvmMode mode, Rng& rng) {
  Latent out;
  Tensor stacked = g.matmul(w, input);
  out.mu = g.slice(stacked, 0, latent);
  out.log_var = g.slice(stacked, latent, latent);
  out.z = mode == LvmMode::train ? g.gaussian_sample(out.mu, out.log_var, rng) : out.mu;
  return out;
}

}  // namespace

LatentPrediction lvm_forward(Graph& g, const std::vector<Tensor>& hidden,
                             const Tensor& pooled, const LvmParams& params,
                             LvmMode mode, Rng& rng) {
  LatentPrediction pred;
  pred.tokens.reserve(hidden.size());
  for (const auto& h : hidden) {
    Latent lat = latent_head(g, h, params.w_slot, params.latent, mode, rng);
    TokenLatent tok;
    tok.mu = lat.mu;
    tok.log_var = lat.log_var;
    tok.z = lat.z;
    tok.slot_dist = g.softmax(g.matmul(params.w_slot_proj, lat.z));
    pred.tokens.push_back(std::move(tok));
  }
  Latent lat = latent_head(g, pooled, params.w_intent, params.latent, mode, rng);
  pred.intent_mu = lat.mu;
  pred.intent_log_var = lat.log_var;
  pred.intent_z = lat.z;
  pred.intent_dist = g.softmax(g.matmul(params.w_intent_proj, lat.z));
  return pred;
}

Tensor fc_forward(Graph& g, const Tensor& z, const FcParams& params) {
  return g.softmax(g.add(g.matmul(params.w, z), params.b));
}

}  // namespace clslu
