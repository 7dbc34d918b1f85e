#include "clslu/objectives.hpp"

#include <algorithm>
#include <cmath>

namespace clslu {

double Schedule::alpha(int64_t epoch) const {
  if (epoch <= 1) return 1.0;
  if (decay == Decay::exponential) return std::pow(gamma, static_cast<double>(epoch - 1));
  const double denom = static_cast<double>(std::max<int64_t>(total_epochs - 1, 1));
  return std::max(0.0, 1.0 - static_cast<double>(epoch - 1) / denom);
}

double Schedule::beta(int64_t) const { return 1.0; }

Tensor label_regularization(Graph& g, const Tensor& u_a, const Tensor& u_b,
                            const Tensor& l_a, const Tensor& l_b) {
  return g.mse(g.cosine(u_a, u_b), g.cosine(l_a, l_b));
}

Tensor adversarial_fc_loss(Graph& g, std::span<const Tensor> latents,
                           const FcParams& fc, int64_t num_slots) {
  if (latents.empty()) return Tensor::scalar(0.0);
  const Tensor uniform = Tensor::full({num_slots}, 1.0 / static_cast<double>(num_slots));
  std::vector<Tensor> terms;
  terms.reserve(latents.size());
  for (const auto& z : latents) {
    Tensor p = fc_forward(g, g.detach(z), fc);
    terms.push_back(g.mse(p, uniform));
  }
  return g.mean(g.concat(terms));
}

Tensor adversarial_lvm_loss(Graph& g, std::span<const Tensor> latents,
                            std::span<const int64_t> slot_targets, const FcParams& fc,
                            int64_t num_slots) {
  if (latents.size() != slot_targets.size())
    throw ShapeError("adversarial_lvm_loss",
                     "latent count " + std::to_string(latents.size()) +
                         " vs target count " + std::to_string(slot_targets.size()));
  if (latents.empty()) return Tensor::scalar(0.0);
  const Tensor w_frozen = g.detach(fc.w);
  const Tensor b_frozen = g.detach(fc.b);
  std::vector<Tensor> terms;
  terms.reserve(latents.size());
  for (size_t i = 0; i < latents.size(); ++i) {
    Tensor p = g.softmax(g.add(g.matmul(w_frozen, latents[i]), b_frozen));
    Tensor one_hot = Tensor::zeros({num_slots});
    one_hot.mutable_values()[static_cast<size_t>(slot_targets[i])] = 1.0;
    terms.push_back(g.mse(p, one_hot));
  }
  return g.mean(g.concat(terms));
}

std::pair<Tensor, Tensor> task_losses(Graph& g, const LatentPrediction& pred,
                                      std::span<const int64_t> slot_targets,
                                      int64_t intent_target) {
  if (pred.tokens.size() != slot_targets.size())
    throw ShapeError("task_losses", "prediction count " + std::to_string(pred.tokens.size()) +
                                        " vs target count " +
                                        std::to_string(slot_targets.size()));
  std::vector<Tensor> token_nll;
  token_nll.reserve(pred.tokens.size());
  for (size_t i = 0; i < pred.tokens.size(); ++i)
    token_nll.push_back(g.nll_onehot(pred.tokens[i].slot_dist, slot_targets[i]));
  Tensor l_slot = g.mean(g.concat(token_nll));
  Tensor l_intent = g.nll_onehot(pred.intent_dist, intent_target);
  return {l_slot, l_intent};
}

TotalLoss total_loss(Graph& g, const LossParts& parts, const Schedule& schedule,
                     int64_t epoch) {
  const double alpha = schedule.alpha(epoch);
  const double beta = schedule.beta(epoch);
  Tensor task = g.add(parts.l_slot, parts.l_intent);
  Tensor weighted =
      g.add(g.scale(parts.l_fc, alpha), g.scale(parts.l_lvm, beta));
  Tensor total = g.add(g.add(task, parts.l_lr), weighted);

  TotalLoss out;
  out.total = total;
  out.report.l_slot = parts.l_slot.item();
  out.report.l_intent = parts.l_intent.item();
  out.report.l_lr = parts.l_lr.item();
  out.report.l_fc = parts.l_fc.item();
  out.report.l_lvm = parts.l_lvm.item();
  out.report.alpha = alpha;
  out.report.beta = beta;
  out.report.total = total.item();
  return out;
}

}  // namespace clslu
