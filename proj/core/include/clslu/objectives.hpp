#pragma once

#include <span>
#include <vector>

#include "clslu/lvm.hpp"
#include "clslu/tensor.hpp"

namespace clslu {

// Named per-step losses and the schedule-weighted total:
// total = l_slot + l_intent + l_lr + alpha * l_fc + beta * l_lvm.
struct LossReport {
  double l_slot = 0.0;
  double l_intent = 0.0;
  double l_lr = 0.0;
  double l_fc = 0.0;
  double l_lvm = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  double total = 0.0;
};

// alpha and beta are both 1 for the first two epochs; afterwards beta stays
// at 1 and alpha decays (linearly to the final epoch, or by a 0.9 factor
// per epoch), so the adversarial head gets a stable warm-up.
struct Schedule {
  enum class Decay { linear, exponential };
  Decay decay = Decay::linear;
  int64_t total_epochs = 2;
  double gamma = 0.9;

  double alpha(int64_t epoch) const;
  double beta(int64_t epoch) const;
};

// (cos(u_a, u_b) - cos(l_a, l_b))^2 for one sample pair. Gradient reaches
// both encoders; a zero-norm vector contributes similarity 0 with no
// gradient (counted on the graph).
Tensor label_regularization(Graph& g, const Tensor& u_a, const Tensor& u_b,
                            const Tensor& l_a, const Tensor& l_b);

// Mean over tokens of MSE(FC(detach(z)), uniform). Only FcParams receive
// gradient: the latents enter as detached values.
Tensor adversarial_fc_loss(Graph& g, std::span<const Tensor> latents,
                           const FcParams& fc, int64_t num_slots);

// Mean over tokens of MSE(FC(z), one_hot(label)) with FcParams entering as
// detached values, so the gradient flows through z into the latent model
// and encoders but never into the FC head.
Tensor adversarial_lvm_loss(Graph& g, std::span<const Tensor> latents,
                            std::span<const int64_t> slot_targets, const FcParams& fc,
                            int64_t num_slots);

// Per-utterance task losses: mean per-token slot NLL and the intent NLL.
std::pair<Tensor, Tensor> task_losses(Graph& g, const LatentPrediction& pred,
                                      std::span<const int64_t> slot_targets,
                                      int64_t intent_target);

struct LossParts {
  Tensor l_slot, l_intent, l_lr, l_fc, l_lvm;
};

struct TotalLoss {
  Tensor total;
  LossReport report;
};

// Combines the five terms with the schedule weights for the given epoch.
TotalLoss total_loss(Graph& g, const LossParts& parts, const Schedule& schedule,
                     int64_t epoch);

}  // namespace clslu
