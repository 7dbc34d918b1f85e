#include "clslu/verify.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "clslu/objectives.hpp"
#include "clslu/synthetic.hpp"
#include "clslu/training.hpp"

namespace clslu {

namespace {

struct ToyBatch {
  SynthOutput synth;
  SluModel model;
  std::vector<Utterance> batch;
  std::pair<Utterance, Utterance> lr_pair;
  uint64_t draw_seed = 0;
};

ToyBatch make_toy(uint64_t seed) {
  SynthConfig scfg;
  scfg.vocab_size = 40;
  scfg.train_count = 10;
  scfg.valid_count = 2;
  scfg.test_count = 2;
  scfg.noise_sigma = 0.2;
  scfg.emb_dim = 4;
  Rng rng(seed);
  ToyBatch toy{make_synthetic_pair(scfg, rng), {}, {}, {}, seed ^ 0x9e3779b97f4a7c15ull};

  ModelDims dims;
  dims.utter_hidden = 3;
  dims.utter_layers = 2;
  dims.label_emb = 3;
  dims.label_hidden = 2;
  dims.latent = 3;
  dims.dropout = 0.1;
  toy.model = SluModel::init(dims, scfg.emb_dim, toy.synth.corpus.slot_labels(),
                             toy.synth.corpus.intent_labels(), rng);

  // Shortest utterances keep the tape small; cost scales with token count.
  std::vector<const Utterance*> by_len;
  for (const auto& u : toy.synth.corpus.train(scfg.source_lang)) by_len.push_back(&u);
  std::stable_sort(by_len.begin(), by_len.end(), [](const Utterance* a, const Utterance* b) {
    return a->tokens.size() < b->tokens.size();
  });
  toy.batch = {*by_len[0], *by_len[1]};
  toy.lr_pair = {*by_len[2], *by_len[3]};
  return toy;
}

struct ToyLosses {
  Tensor l_slot, l_intent, l_lr, l_fc, l_lvm;
};

// One full forward of the toy step: both task utterances in train mode,
// the LR pair, and both adversarial heads. Draw order is fixed, so a
// reseeded Rng reproduces the pass bit for bit.
ToyLosses build_losses(Graph& g, const ToyBatch& toy) {
  Rng rng(toy.draw_seed);
  const auto& model = toy.model;
  const auto& table = toy.synth.embeddings;
  const int64_t num_slots = static_cast<int64_t>(model.slot_labels.size());

  std::vector<Tensor> slot_terms, intent_terms, latents;
  std::vector<int64_t> latent_targets;
  for (const auto& u : toy.batch) {
    UtteranceForward fwd = forward_utterance(g, model, table, u, LvmMode::train, true, rng);
    std::vector<int64_t> targets;
    for (const auto& s : u.slots) targets.push_back(model.slot_index(s));
    auto [ls, li] = task_losses(g, fwd.prediction, targets, model.intent_index(u.intent));
    slot_terms.push_back(ls);
    intent_terms.push_back(li);
    for (size_t t = 0; t < fwd.prediction.tokens.size(); ++t) {
      latents.push_back(fwd.prediction.tokens[t].z);
      latent_targets.push_back(targets[t]);
    }
  }

  ToyLosses out;
  out.l_slot = g.mean(g.concat(slot_terms));
  out.l_intent = g.mean(g.concat(intent_terms));

  const auto& [a, b] = toy.lr_pair;
  EncodedPair u_a = encode_utterance(g, a.tokens, table, model.encoder.utterance, true, rng);
  EncodedPair u_b = encode_utterance(g, b.tokens, table, model.encoder.utterance, true, rng);
  std::vector<int64_t> la_idx, lb_idx;
  for (const auto& s : a.slots) la_idx.push_back(model.slot_index(s));
  for (const auto& s : b.slots) lb_idx.push_back(model.slot_index(s));
  EncodedPair l_a = encode_labels(g, la_idx, model.encoder.label);
  EncodedPair l_b = encode_labels(g, lb_idx, model.encoder.label);
  out.l_lr = label_regularization(g, u_a.pooled, u_b.pooled, l_a.pooled, l_b.pooled);

  out.l_fc = adversarial_fc_loss(g, latents, model.fc, num_slots);
  out.l_lvm = adversarial_lvm_loss(g, latents, latent_targets, model.fc, num_slots);
  return out;
}

}  // namespace

LossGradCheckSummary check_loss_gradients(uint64_t seed, double h, double tol) {
  ToyBatch toy = make_toy(seed);
  const NamedTensors all = toy.model.all_params();
  const NamedTensors main = toy.model.main_params();
  const NamedTensors fc = toy.model.fc_params();

  auto pick = [&](Tensor ToyLosses::* member) {
    return [&toy, member](Graph& g) { return build_losses(g, toy).*member; };
  };
  // The total objective is checked per parameter group against the terms
  // that actually reach that group: the L^fc term sees detached latents and
  // the L^lvm term sees a detached FC head, so a plain finite difference of
  // the full sum would measure derivatives the routed gradient excludes by
  // construction.
  auto main_objective = [&toy](Graph& g) {
    ToyLosses l = build_losses(g, toy);
    return g.add(g.add(g.add(l.l_slot, l.l_intent), l.l_lr), l.l_lvm);
  };
  auto fc_objective = [&toy](Graph& g) { return build_losses(g, toy).l_fc; };

  LossGradCheckSummary summary;
  summary.tol = tol;
  const struct {
    const char* name;
    ScalarFn fn;
    const NamedTensors* params;
  } checks[] = {
      {"L^S", pick(&ToyLosses::l_slot), &all},
      {"L^I", pick(&ToyLosses::l_intent), &all},
      {"L^lr", pick(&ToyLosses::l_lr), &all},
      {"L^fc", pick(&ToyLosses::l_fc), &fc},
      {"L^lvm", pick(&ToyLosses::l_lvm), &main},
      {"total[main]", main_objective, &main},
      {"total[fc]", fc_objective, &fc},
  };
  for (const auto& c : checks) {
    GradCheckReport report = finite_diff_check(c.fn, *c.params, h, tol);
    summary.max_rel_err = std::max(summary.max_rel_err, report.max_rel_err);
    summary.checks.push_back({c.name, std::move(report)});
  }
  summary.passed = summary.max_rel_err < tol;
  return summary;
}

std::string format_gradcheck_report(const LossGradCheckSummary& summary, uint64_t seed) {
  std::ostringstream os;
  char buf[256];
  for (const auto& c : summary.checks) {
    std::snprintf(buf, sizeof buf,
                  "seed %llu  %-12s max_rel_err %.3e  (%lld entries, worst %s[%lld])\n",
                  static_cast<unsigned long long>(seed), c.loss.c_str(),
                  c.report.max_rel_err, static_cast<long long>(c.report.entries_checked),
                  c.report.worst.param.c_str(), static_cast<long long>(c.report.worst.index));
    os << buf;
  }
  return os.str();
}

}  // namespace clslu
