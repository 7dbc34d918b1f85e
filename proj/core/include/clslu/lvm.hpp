#pragma once

#include <vector>

#include "clslu/tensor.hpp"

namespace clslu {

// Latent heads: a linear map from hidden states to stacked [mu; log var]
// (first half mu, second half log var), a reparameterized draw, and a
// linear+softmax predictor, on both the per-token and per-sentence paths.
struct LvmParams {
  Tensor w_slot;         // {2L, 2H}  h_i -> [mu; log var]
  Tensor w_intent;       // {2L, 2H}  pooled -> [mu; log var]
  Tensor w_slot_proj;    // {K_slot, L}
  Tensor w_intent_proj;  // {K_intent, L}
  int64_t latent = 150;
};

// Adversarial head: affine map plus softmax over slot labels. Disjoint
// from LvmParams and excluded from the main optimizer group.
struct FcParams {
  Tensor w;  // {K_slot, L}
  Tensor b;  // {K_slot}
};

LvmParams init_lvm_params(int64_t hidden2, int64_t latent, int64_t num_slots,
                          int64_t num_intents, Rng& rng);
FcParams init_fc_params(int64_t latent, int64_t num_slots, Rng& rng);

enum class LvmMode { train, infer };

struct TokenLatent {
  Tensor mu, log_var, z;
  Tensor slot_dist;  // simplex over slot labels
};

struct LatentPrediction {
  std::vector<TokenLatent> tokens;
  Tensor intent_mu, intent_log_var, intent_z;
  Tensor intent_dist;
};

// train: z is one reparameterized draw per token and per sentence.
// infer: z := mu exactly and no randomness is consumed.
LatentPrediction lvm_forward(Graph& g, const std::vector<Tensor>& hidden,
                             const Tensor& pooled, const LvmParams& params,
                             LvmMode mode, Rng& rng);

// softmax(W z + b); simplex output.
Tensor fc_forward(Graph& g, const Tensor& z, const FcParams& params);

}  // namespace clslu
