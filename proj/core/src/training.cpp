#include "clslu/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace clslu {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw Error("train config: learning_rate must be positive");
  if (epochs < 2) throw Error("train config: epochs must be at least 2 (schedule warm-up)");
  if (batch_size < 1) throw Error("train config: batch_size must be at least 1");
  if (pairs_per_step < 1) throw Error("train config: pairs_per_step must be at least 1");
  if (regime == Regime::few_shot && (fraction < 0.0 || fraction > 1.0))
    throw Error("train config: few-shot fraction must lie in [0, 1]");
}

std::pair<Utterance, Utterance> sample_lr_pair(const Corpus& corpus,
                                               TrainConfig::Regime regime,
                                               const std::string& source_lang,
                                               const std::string& target_lang, Rng& rng) {
  const auto& src = corpus.train(source_lang);
  if (src.empty()) throw Error("sample_lr_pair: source train split is empty");
  auto pick = [&rng](const std::vector<Utterance>& pool) -> const Utterance& {
    return pool[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(pool.size())))];
  };
  if (regime == TrainConfig::Regime::zero_shot) return {pick(src), pick(src)};
  const auto& trg = corpus.train(target_lang);
  if (trg.empty())
    throw Error(
        "sample_lr_pair: few_shot regime with an empty target train split; "
        "use the zero_shot regime instead");
  return {pick(src), pick(trg)};
}

namespace {

std::vector<int64_t> slot_targets(const SluModel& model, const Utterance& u) {
  std::vector<int64_t> out;
  out.reserve(u.slots.size());
  for (const auto& s : u.slots) out.push_back(model.slot_index(s));
  return out;
}

struct StepInputs {
  std::vector<const Utterance*> batch;
  std::vector<std::pair<Utterance, Utterance>> lr_pairs;
};

LossParts build_step_losses(Graph& g, const SluModel& model, const EmbeddingTable& table,
                            const StepInputs& in, const TrainConfig& cfg, Rng& rng) {
  std::vector<Tensor> slot_terms, intent_terms, latents;
  std::vector<int64_t> latent_targets;
  for (const Utterance* u : in.batch) {
    UtteranceForward fwd =
        forward_utterance(g, model, table, *u, LvmMode::train, true, rng);
    const auto targets = slot_targets(model, *u);
    auto [l_slot, l_intent] = task_losses(g, fwd.prediction, targets, model.intent_index(u->intent));
    slot_terms.push_back(l_slot);
    intent_terms.push_back(l_intent);
    if (cfg.use_alvm) {
      for (size_t t = 0; t < fwd.prediction.tokens.size(); ++t) {
        latents.push_back(fwd.prediction.tokens[t].z);
        latent_targets.push_back(targets[t]);
      }
    }
  }

  LossParts parts;
  parts.l_slot = g.mean(g.concat(slot_terms));
  parts.l_intent = g.mean(g.concat(intent_terms));

  if (cfg.use_lr) {
    Tensor sum;
    for (const auto& [a, b] : in.lr_pairs) {
      EncodedPair u_a = encode_utterance(g, a.tokens, table, model.encoder.utterance, true, rng);
      EncodedPair u_b = encode_utterance(g, b.tokens, table, model.encoder.utterance, true, rng);
      EncodedPair l_a = encode_labels(g, slot_targets(model, a), model.encoder.label);
      EncodedPair l_b = encode_labels(g, slot_targets(model, b), model.encoder.label);
      Tensor term = label_regularization(g, u_a.pooled, u_b.pooled, l_a.pooled, l_b.pooled);
      sum = sum.defined() ? g.add(sum, term) : term;
    }
    parts.l_lr = sum;
  } else {
    parts.l_lr = Tensor::scalar(0.0);
  }

  const int64_t num_slots = static_cast<int64_t>(model.slot_labels.size());
  if (cfg.use_alvm) {
    parts.l_fc = adversarial_fc_loss(g, latents, model.fc, num_slots);
    parts.l_lvm = adversarial_lvm_loss(g, latents, latent_targets, model.fc, num_slots);
  } else {
    parts.l_fc = Tensor::scalar(0.0);
    parts.l_lvm = Tensor::scalar(0.0);
  }
  return parts;
}

std::string csv_row(int64_t epoch, int64_t step, const LossReport& r) {
  char buf[352];
  std::snprintf(buf, sizeof buf,
                "%lld,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                static_cast<long long>(epoch), static_cast<long long>(step), r.l_slot,
                r.l_intent, r.l_lr, r.l_fc, r.l_lvm, r.alpha, r.beta, r.total);
  return buf;
}

}  // namespace

EvalResult evaluate_model(const SluModel& model, const EmbeddingTable& table,
                          std::span<const Utterance> utterances) {
  if (utterances.empty()) throw Error("evaluate_model: no utterances");
  std::vector<std::vector<std::string>> gold_slots, pred_slots;
  std::vector<std::string> gold_intents, pred_intents;
  for (const auto& u : utterances) {
    Decoded d = decode_utterance(model, table, u);
    gold_slots.push_back(u.slots);
    pred_slots.push_back(std::move(d.slots));
    gold_intents.push_back(u.intent);
    pred_intents.push_back(std::move(d.intent));
  }
  EvalResult r = bio_f1(gold_slots, pred_slots);
  r.intent_accuracy = intent_accuracy(gold_intents, pred_intents);
  return r;
}

std::optional<LabelEncoderParams> pretrain_label_encoder(const Corpus& corpus,
                                                         const EmbeddingTable& table,
                                                         const TrainConfig& cfg, Rng& rng) {
  if (!cfg.use_pretrain || cfg.pretrain_epochs <= 0) return std::nullopt;

  SluModel model = SluModel::init(cfg.dims, table.dim(), corpus.slot_labels(),
                                  corpus.intent_labels(), rng);
  Adam main_opt(
      [&] {
        std::vector<Tensor> ts;
        for (auto& [n, t] : model.main_params()) ts.push_back(t);
        return ts;
      }(),
      cfg.learning_rate);
  Adam fc_opt(
      [&] {
        std::vector<Tensor> ts;
        for (auto& [n, t] : model.fc_params()) ts.push_back(t);
        return ts;
      }(),
      cfg.learning_rate);

  const auto& pool = corpus.train(cfg.source_lang);
  if (pool.empty()) throw Error("pretrain_label_encoder: source train split is empty");
  const int64_t steps_per_epoch = std::max<int64_t>(
      1, (static_cast<int64_t>(pool.size()) + cfg.batch_size - 1) / cfg.batch_size);
  Schedule warm{cfg.alpha_decay, cfg.epochs, 0.9};

  TrainConfig pre_cfg = cfg;
  pre_cfg.use_lr = true;  // the pretraining objective
  for (int64_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    for (int64_t step = 0; step < steps_per_epoch; ++step) {
      StepInputs in;
      for (int64_t b = 0; b < cfg.batch_size; ++b)
        in.batch.push_back(
            &pool[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(pool.size())))]);
      for (int64_t p = 0; p < cfg.pairs_per_step; ++p)
        in.lr_pairs.push_back(sample_lr_pair(corpus, TrainConfig::Regime::zero_shot,
                                             cfg.source_lang, cfg.target_lang, rng));
      Graph g;
      LossParts parts = build_step_losses(g, model, table, in, pre_cfg, rng);
      TotalLoss loss = total_loss(g, parts, warm, 0);  // alpha = beta = 1 throughout
      if (!std::isfinite(loss.report.total))
        throw Error("pretrain_label_encoder: loss diverged (non-finite total)");
      main_opt.zero_grad();
      fc_opt.zero_grad();
      g.backward(loss.total);
      main_opt.step();
      fc_opt.step();
    }
  }
  return model.encoder.label;
}

TrainResult train(const Corpus& corpus, const EmbeddingTable& table, SluModel model,
                  const TrainConfig& cfg, Rng& rng) {
  cfg.validate();

  std::vector<const Utterance*> pool;
  for (const auto& u : corpus.train(cfg.source_lang)) pool.push_back(&u);
  if (cfg.regime == TrainConfig::Regime::few_shot)
    for (const auto& u : corpus.train(cfg.target_lang)) pool.push_back(&u);
  if (pool.empty()) throw Error("train: no training data");

  const std::string eval_lang =
      !cfg.target_lang.empty() && corpus.has_language(cfg.target_lang) ? cfg.target_lang
                                                                       : cfg.source_lang;

  Adam main_opt(
      [&] {
        std::vector<Tensor> ts;
        for (auto& [n, t] : model.main_params()) ts.push_back(t);
        return ts;
      }(),
      cfg.learning_rate);
  Adam fc_opt(
      [&] {
        std::vector<Tensor> ts;
        for (auto& [n, t] : model.fc_params()) ts.push_back(t);
        return ts;
      }(),
      cfg.learning_rate);

  const int64_t steps_per_epoch = std::max<int64_t>(
      1, (static_cast<int64_t>(pool.size()) + cfg.batch_size - 1) / cfg.batch_size);
  Schedule schedule{cfg.alpha_decay, cfg.epochs, 0.9};

  TrainResult result;
  std::ostringstream log;
  log << "epoch,step,l_slot,l_intent,l_lr,l_fc,l_lvm,alpha,beta,total\n";
  double best_metric = -1.0;

  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int64_t step = 0; step < steps_per_epoch; ++step) {
      StepInputs in;
      for (int64_t b = 0; b < cfg.batch_size; ++b)
        in.batch.push_back(
            pool[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(pool.size())))]);
      if (cfg.use_lr)
        for (int64_t p = 0; p < cfg.pairs_per_step; ++p)
          in.lr_pairs.push_back(sample_lr_pair(corpus, cfg.regime, cfg.source_lang,
                                               cfg.target_lang, rng));
      Graph g;
      LossParts parts = build_step_losses(g, model, table, in, cfg, rng);
      TotalLoss loss = total_loss(g, parts, schedule, epoch);
      if (!std::isfinite(loss.report.total))
        throw Error("train: loss diverged (non-finite total) at epoch " +
                    std::to_string(epoch));
      main_opt.zero_grad();
      fc_opt.zero_grad();
      g.backward(loss.total);
      main_opt.step();
      fc_opt.step();
      log << csv_row(epoch, step, loss.report);
      result.steps.push_back(loss.report);
    }

    const EvalResult valid = evaluate_model(model, table, corpus.valid(eval_lang));
    const double metric = valid.combined();
    result.valid_history.push_back(metric);
    result.epochs_run = epoch + 1;
    if (metric > best_metric) {
      best_metric = metric;
      result.best = model.clone();
      result.best_valid = valid;
      result.best_epoch = epoch;
      result.best_metric_history.push_back(metric);
    } else if (epoch - result.best_epoch >= cfg.early_stop_patience) {
      break;
    }
  }

  result.last = std::move(model);
  result.log_csv = log.str();
  return result;
}

ExperimentResult run_experiment(Corpus corpus, const EmbeddingTable& table,
                                const TrainConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  if (cfg.use_delex) corpus = delexicalize(corpus);
  if (cfg.regime == TrainConfig::Regime::few_shot) {
    if (cfg.target_lang.empty() || !corpus.has_language(cfg.target_lang))
      throw Error("run_experiment: few_shot regime needs a target language");
    corpus = few_shot_subsample(corpus, cfg.target_lang, cfg.fraction, rng);
  }

  SluModel model = SluModel::init(cfg.dims, table.dim(), corpus.slot_labels(),
                                  corpus.intent_labels(), rng);
  if (auto pretrained = pretrain_label_encoder(corpus, table, cfg, rng))
    model.encoder.label = std::move(*pretrained);

  TrainResult trained = train(corpus, table, std::move(model), cfg, rng);

  ExperimentResult out;
  out.model = std::move(trained.best);
  out.valid = trained.best_valid;
  out.best_epoch = trained.best_epoch;
  out.epochs_run = trained.epochs_run;
  out.log_csv = std::move(trained.log_csv);
  out.steps = std::move(trained.steps);
  out.best_metric_history = std::move(trained.best_metric_history);

  const std::string eval_lang =
      !cfg.target_lang.empty() && corpus.has_language(cfg.target_lang) ? cfg.target_lang
                                                                       : cfg.source_lang;
  out.test = evaluate_model(out.model, table, corpus.test(eval_lang));
  if (cfg.regime == TrainConfig::Regime::few_shot)
    out.target_train_size = corpus.train(cfg.target_lang).size();
  return out;
}

std::vector<AblationRow> ablate(const Corpus& corpus, const EmbeddingTable& table,
                                const TrainConfig& base,
                                const std::vector<std::vector<std::string>>& rows,
                                int64_t seeds_per_row) {
  if (seeds_per_row < 1) throw Error("ablate: seeds_per_row must be at least 1");
  std::vector<AblationRow> out;
  for (const auto& toggles : rows) {
    TrainConfig cfg = base;
    cfg.use_lr = cfg.use_alvm = cfg.use_delex = cfg.use_pretrain = false;
    std::string name;
    for (const auto& t : toggles) {
      if (t == "lr")
        cfg.use_lr = true;
      else if (t == "alvm")
        cfg.use_alvm = true;
      else if (t == "delex")
        cfg.use_delex = true;
      else if (t == "pretrain")
        cfg.use_pretrain = true;
      else if (t != "none")
        throw Error("ablate: unknown toggle '" + t + "'");
      if (t != "none") name += (name.empty() ? "" : ",") + t;
    }
    if (name.empty()) name = "none";

    AblationRow row;
    row.name = name;
    row.runs = seeds_per_row;
    for (int64_t s = 0; s < seeds_per_row; ++s) {
      cfg.seed = base.seed + static_cast<uint64_t>(s);
      ExperimentResult res = run_experiment(corpus, table, cfg);
      row.mean_slot_f1 += res.test.slot_f1;
      row.mean_intent_acc += res.test.intent_accuracy;
      row.mean_combined += res.test.combined();
    }
    row.mean_slot_f1 /= static_cast<double>(seeds_per_row);
    row.mean_intent_acc /= static_cast<double>(seeds_per_row);
    row.mean_combined /= static_cast<double>(seeds_per_row);
    out.push_back(std::move(row));
  }
  return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "config,runs,mean_slot_f1,mean_intent_acc,mean_combined\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%lld,%.6f,%.6f,%.6f\n",
                  static_cast<long long>(r.runs), r.mean_slot_f1, r.mean_intent_acc,
                  r.mean_combined);
    os << r.name << buf;
  }
  return os.str();
}

}  // namespace clslu
