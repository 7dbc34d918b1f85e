#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clslu/adam.hpp"
#include "clslu/data.hpp"
#include "clslu/metrics.hpp"
#include "clslu/model.hpp"
#include "clslu/objectives.hpp"
#include "clslu/synthetic.hpp"

namespace clslu {

struct TrainConfig {
  enum class Regime { zero_shot, few_shot };

  int64_t epochs = 30;          // at least 2 (the schedule warms up for two)
  double learning_rate = 1e-3;  // Adam, beta1 0.9, beta2 0.999, eps 1e-8
  uint64_t seed = 1;
  Regime regime = Regime::zero_shot;
  double fraction = 0.01;  // few-shot target train fraction
  int64_t pairs_per_step = 1;
  Schedule::Decay alpha_decay = Schedule::Decay::linear;
  int64_t pretrain_epochs = 5;
  int64_t early_stop_patience = 10;
  int64_t batch_size = 32;

  bool use_lr = true;
  bool use_alvm = true;
  bool use_delex = false;
  bool use_pretrain = true;

  ModelDims dims;
  std::string source_lang = "en";
  std::string target_lang;

  void validate() const;
};

// Uniform-with-replacement pair draw for label regularization: both from
// the source train split in zero-shot, one source + one target in few-shot.
std::pair<Utterance, Utterance> sample_lr_pair(const Corpus& corpus,
                                               TrainConfig::Regime regime,
                                               const std::string& source_lang,
                                               const std::string& target_lang, Rng& rng);

// Trains a throwaway model on the source language alone (alpha = beta = 1,
// label regularization always on) and returns the label-side encoder for
// the main run to start from. pretrain_epochs == 0 leaves initialization
// untouched by returning nothing.
std::optional<LabelEncoderParams> pretrain_label_encoder(const Corpus& corpus,
                                                         const EmbeddingTable& table,
                                                         const TrainConfig& cfg, Rng& rng);

EvalResult evaluate_model(const SluModel& model, const EmbeddingTable& table,
                          std::span<const Utterance> utterances);

struct TrainResult {
  SluModel best;
  SluModel last;  // state after the final step, regardless of validation
  EvalResult best_valid;
  int64_t best_epoch = -1;
  int64_t epochs_run = 0;
  std::vector<LossReport> steps;
  std::string log_csv;  // epoch,step,l_slot,l_intent,l_lr,l_fc,l_lvm,alpha,beta,total
  std::vector<double> valid_history;        // one combined metric per epoch
  std::vector<double> best_metric_history;  // metric at each improvement
};

// Core loop over an already-prepared corpus (delexicalization, subsampling
// and pretraining are the caller's job; see run_experiment). Keeps the
// best checkpoint by the mean of validation slot F1 and intent accuracy,
// stopping after early_stop_patience epochs without improvement.
TrainResult train(const Corpus& corpus, const EmbeddingTable& table, SluModel model,
                  const TrainConfig& cfg, Rng& rng);

struct ExperimentResult {
  SluModel model;
  EvalResult valid;
  EvalResult test;
  int64_t best_epoch = -1;
  int64_t epochs_run = 0;
  std::string log_csv;
  std::vector<LossReport> steps;
  std::vector<double> best_metric_history;
  size_t target_train_size = 0;  // after any subsampling
};

// Full pipeline: delexicalize, subsample, initialize, pretrain, train,
// evaluate on the target-language test split (source when no target).
ExperimentResult run_experiment(Corpus corpus, const EmbeddingTable& table,
                                const TrainConfig& cfg);

struct AblationRow {
  std::string name;  // comma-joined toggles, "none" for the bare model
  int64_t runs = 0;
  double mean_slot_f1 = 0.0;
  double mean_intent_acc = 0.0;
  double mean_combined = 0.0;
};

// Runs each toggle configuration over seeds_per_row seeds (base seed,
// base seed + 1, ...) and reports mean test metrics per configuration.
// Valid toggle names: lr, alvm, delex, pretrain.
std::vector<AblationRow> ablate(const Corpus& corpus, const EmbeddingTable& table,
                                const TrainConfig& base,
                                const std::vector<std::vector<std::string>>& rows,
                                int64_t seeds_per_row);

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace clslu
