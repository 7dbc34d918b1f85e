#include "clslu/model.hpp"

#include <algorithm>

namespace clslu {

SluModel SluModel::init(const ModelDims& dims, int64_t word_emb_dim,
                        std::vector<std::string> slot_labels,
                        std::vector<std::string> intent_labels, Rng& rng) {
  SluModel m;
  m.dims = dims;
  m.word_emb_dim = word_emb_dim;
  m.slot_labels = std::move(slot_labels);
  m.intent_labels = std::move(intent_labels);

  EncoderDims enc_dims{dims.utter_hidden, dims.utter_layers, dims.label_emb,
                       dims.label_hidden, dims.dropout};
  m.encoder = init_encoder_params(enc_dims, word_emb_dim,
                                  static_cast<int64_t>(m.slot_labels.size()), rng);
  m.lvm = init_lvm_params(2 * dims.utter_hidden, dims.latent,
                          static_cast<int64_t>(m.slot_labels.size()),
                          static_cast<int64_t>(m.intent_labels.size()), rng);
  m.fc = init_fc_params(dims.latent, static_cast<int64_t>(m.slot_labels.size()), rng);
  return m;
}

namespace {

void add_bilstm(NamedTensors& out, const std::string& prefix, const BiLstmParams& p) {
  for (size_t l = 0; l < p.fwd.size(); ++l) {
    const std::string base = prefix + ".l" + std::to_string(l);
    out.emplace_back(base + ".fwd.w_x", p.fwd[l].w_x);
    out.emplace_back(base + ".fwd.w_h", p.fwd[l].w_h);
    out.emplace_back(base + ".fwd.b", p.fwd[l].b);
    out.emplace_back(base + ".bwd.w_x", p.bwd[l].w_x);
    out.emplace_back(base + ".bwd.w_h", p.bwd[l].w_h);
    out.emplace_back(base + ".bwd.b", p.bwd[l].b);
  }
}

}  // namespace

NamedTensors SluModel::main_params() const {
  NamedTensors out;
  add_bilstm(out, "utter", encoder.utterance.bilstm);
  out.emplace_back("utter.attn_v", encoder.utterance.attention_v);
  out.emplace_back("label.emb", encoder.label.embeddings);
  add_bilstm(out, "label", encoder.label.bilstm);
  out.emplace_back("label.attn_v", encoder.label.attention_v);
  out.emplace_back("lvm.w_slot", lvm.w_slot);
  out.emplace_back("lvm.w_intent", lvm.w_intent);
  out.emplace_back("lvm.w_slot_proj", lvm.w_slot_proj);
  out.emplace_back("lvm.w_intent_proj", lvm.w_intent_proj);
  return out;
}

NamedTensors SluModel::fc_params() const {
  return {{"fc.w", fc.w}, {"fc.b", fc.b}};
}

NamedTensors SluModel::all_params() const {
  NamedTensors out = main_params();
  for (auto& p : fc_params()) out.push_back(p);
  return out;
}

int64_t SluModel::slot_index(const std::string& label) const {
  auto it = std::find(slot_labels.begin(), slot_labels.end(), label);
  if (it == slot_labels.end()) throw Error("model: slot label '" + label + "' not in inventory");
  return it - slot_labels.begin();
}

int64_t SluModel::intent_index(const std::string& label) const {
  auto it = std::find(intent_labels.begin(), intent_labels.end(), label);
  if (it == intent_labels.end())
    throw Error("model: intent label '" + label + "' not in inventory");
  return it - intent_labels.begin();
}

SluModel SluModel::clone() const {
  SluModel copy = *this;
  auto deep = [](Tensor& t) {
    t = Tensor::from(t.shape(), std::vector<double>(t.values().begin(), t.values().end()),
                     t.requires_grad());
  };
  auto deep_bilstm = [&](BiLstmParams& p) {
    for (auto* dir : {&p.fwd, &p.bwd})
      for (auto& layer : *dir) {
        deep(layer.w_x);
        deep(layer.w_h);
        deep(layer.b);
      }
  };
  deep_bilstm(copy.encoder.utterance.bilstm);
  deep(copy.encoder.utterance.attention_v);
  deep(copy.encoder.label.embeddings);
  deep_bilstm(copy.encoder.label.bilstm);
  deep(copy.encoder.label.attention_v);
  deep(copy.lvm.w_slot);
  deep(copy.lvm.w_intent);
  deep(copy.lvm.w_slot_proj);
  deep(copy.lvm.w_intent_proj);
  deep(copy.fc.w);
  deep(copy.fc.b);
  return copy;
}

UtteranceForward forward_utterance(Graph& g, const SluModel& model,
                                   const EmbeddingTable& table, const Utterance& utt,
                                   LvmMode mode, bool train_mode, Rng& rng) {
  UtteranceForward out;
  out.encoded = encode_utterance(g, utt.tokens, table, model.encoder.utterance,
                                 train_mode, rng);
  out.prediction =
      lvm_forward(g, out.encoded.hidden, out.encoded.pooled, model.lvm, mode, rng);
  return out;
}

Decoded decode_utterance(const SluModel& model, const EmbeddingTable& table,
                         const Utterance& utt) {
  Graph g;
  Rng unused(0);
  UtteranceForward fwd =
      forward_utterance(g, model, table, utt, LvmMode::infer, false, unused);
  Decoded out;
  out.slots.reserve(utt.tokens.size());
  auto argmax = [](std::span<const double> v) {
    size_t best = 0;
    for (size_t i = 1; i < v.size(); ++i)
      if (v[i] > v[best]) best = i;
    return best;
  };
  for (const auto& tok : fwd.prediction.tokens)
    out.slots.push_back(model.slot_labels[argmax(tok.slot_dist.values())]);
  out.intent = model.intent_labels[argmax(fwd.prediction.intent_dist.values())];
  return out;
}

}  // namespace clslu
