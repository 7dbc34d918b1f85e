#pragma once

#include <string>
#include <utility>
#include <vector>

#include "clslu/data.hpp"
#include "clslu/embeddings.hpp"
#include "clslu/encoders.hpp"
#include "clslu/lvm.hpp"

namespace clslu {

struct ModelDims {
  int64_t utter_hidden = 250;
  int64_t utter_layers = 2;
  int64_t label_emb = 100;
  int64_t label_hidden = 150;
  int64_t latent = 150;
  double dropout = 0.1;
};

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// The full parameter bundle plus the label inventories it predicts over.
// Word embeddings are not part of the model: they stay frozen in the
// EmbeddingTable and never receive gradient.
struct SluModel {
  ModelDims dims;
  int64_t word_emb_dim = 0;
  std::vector<std::string> slot_labels;
  std::vector<std::string> intent_labels;

  EncoderParams encoder;
  LvmParams lvm;
  FcParams fc;

  static SluModel init(const ModelDims& dims, int64_t word_emb_dim,
                       std::vector<std::string> slot_labels,
                       std::vector<std::string> intent_labels, Rng& rng);

  // Everything except the adversarial head.
  NamedTensors main_params() const;
  // The adversarial head only; disjoint from main_params by construction.
  NamedTensors fc_params() const;
  NamedTensors all_params() const;

  int64_t slot_index(const std::string& label) const;
  int64_t intent_index(const std::string& label) const;

  // Deep copy (fresh buffers), used for best-checkpoint tracking.
  SluModel clone() const;
};

struct UtteranceForward {
  EncodedPair encoded;
  LatentPrediction prediction;
};

UtteranceForward forward_utterance(Graph& g, const SluModel& model,
                                   const EmbeddingTable& table, const Utterance& utt,
                                   LvmMode mode, bool train_mode, Rng& rng);

// Deterministic argmax decode at z = mu, no dropout.
struct Decoded {
  std::vector<std::string> slots;
  std::string intent;
};
Decoded decode_utterance(const SluModel& model, const EmbeddingTable& table,
                         const Utterance& utt);

}  // namespace clslu
