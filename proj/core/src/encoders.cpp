#include "clslu/encoders.hpp"

namespace clslu {

namespace {

LstmParams init_lstm(int64_t input, int64_t hidden, Rng& rng) {
  LstmParams p;
  p.hidden = hidden;
  p.w_x = xavier_uniform({4 * hidden, input}, rng);
  p.w_h = xavier_uniform({4 * hidden, hidden}, rng);
  p.b = Tensor::zeros({4 * hidden}, true);
  // Forget-gate bias starts at 1 so early cell state survives.
  auto b = p.b.mutable_values();
  for (int64_t i = hidden; i < 2 * hidden; ++i) b[static_cast<size_t>(i)] = 1.0;
  return p;
}

BiLstmParams init_bilstm(int64_t input, int64_t hidden, int64_t layers, Rng& rng) {
  BiLstmParams p;
  p.hidden = hidden;
  for (int64_t l = 0; l < layers; ++l) {
    const int64_t in = l == 0 ? input : 2 * hidden;
    p.fwd.push_back(init_lstm(in, hidden, rng));
    p.bwd.push_back(init_lstm(in, hidden, rng));
  }
  return p;
}

// One direction over the whole sequence; returns h_t per step.
std::vector<Tensor> run_lstm(Graph& g, const std::vector<Tensor>& inputs,
                             const LstmParams& p, bool reverse) {
  const int64_t h = p.hidden;
  const size_t n = inputs.size();
  Tensor h_prev = Tensor::zeros({h});
  Tensor c_prev = Tensor::zeros({h});
  std::vector<Tensor> states(n);
  for (size_t step = 0; step < n; ++step) {
    const size_t t = reverse ? n - 1 - step : step;
    Tensor gates =
        g.add(g.add(g.matmul(p.w_x, inputs[t]), g.matmul(p.w_h, h_prev)), p.b);
    Tensor i_gate = g.sigmoid(g.slice(gates, 0, h));
    Tensor f_gate = g.sigmoid(g.slice(gates, h, h));
    Tensor cand = g.tanh(g.slice(gates, 2 * h, h));
    Tensor o_gate = g.sigmoid(g.slice(gates, 3 * h, h));
    Tensor c = g.add(g.mul(f_gate, c_prev), g.mul(i_gate, cand));
    Tensor h_t = g.mul(o_gate, g.tanh(c));
    states[t] = h_t;
    h_prev = h_t;
    c_prev = c;
  }
  return states;
}

}  // namespace

EncoderParams init_encoder_params(const EncoderDims& dims, int64_t word_emb_dim,
                                  int64_t num_labels, Rng& rng) {
  EncoderParams p;
  p.utterance.bilstm = init_bilstm(word_emb_dim, dims.utter_hidden, dims.utter_layers, rng);
  p.utterance.attention_v = xavier_uniform({2 * dims.utter_hidden}, rng);
  p.utterance.dropout = dims.dropout;
  p.label.embeddings = xavier_uniform({num_labels, dims.label_emb}, rng);
  p.label.bilstm = init_bilstm(dims.label_emb, dims.label_hidden, 1, rng);
  p.label.attention_v = xavier_uniform({2 * dims.label_hidden}, rng);
  return p;
}

EncodedPair encode_sequence(Graph& g, const std::vector<Tensor>& inputs,
                            const BiLstmParams& bilstm, const Tensor& attention_v,
                            double dropout, bool train_mode, Rng& rng) {
  if (inputs.empty()) throw Error("encode_sequence: empty input sequence");

  std::vector<Tensor> layer_in = inputs;
  for (int64_t l = 0; l < bilstm.layers(); ++l) {
    const auto fwd = run_lstm(g, layer_in, bilstm.fwd[static_cast<size_t>(l)], false);
    const auto bwd = run_lstm(g, layer_in, bilstm.bwd[static_cast<size_t>(l)], true);
    std::vector<Tensor> layer_out(inputs.size());
    for (size_t t = 0; t < inputs.size(); ++t) {
      const Tensor parts[] = {fwd[t], bwd[t]};
      Tensor h = g.concat(parts);
      if (dropout > 0.0) h = g.dropout(h, dropout, train_mode, rng);
      layer_out[t] = h;
    }
    layer_in = std::move(layer_out);
  }

  EncodedPair out;
  out.hidden = std::move(layer_in);
  std::vector<Tensor> scores(out.hidden.size());
  for (size_t t = 0; t < out.hidden.size(); ++t) scores[t] = g.dot(out.hidden[t], attention_v);
  out.attention = g.softmax(g.concat(scores));
  out.hidden_matrix = g.stack(out.hidden);
  out.pooled = g.matmul(out.attention, out.hidden_matrix);
  return out;
}

EncodedPair encode_utterance(Graph& g, const std::vector<std::string>& tokens,
                             const EmbeddingTable& table,
                             const UtteranceEncoderParams& params, bool train_mode,
                             Rng& rng) {
  if (tokens.empty()) throw Error("encode_utterance: empty token list");
  std::vector<Tensor> inputs;
  inputs.reserve(tokens.size());
  for (const auto& tok : tokens) {
    auto vec = table.lookup(tok);
    inputs.push_back(Tensor::from({table.dim()}, std::vector<double>(vec.begin(), vec.end())));
  }
  return encode_sequence(g, inputs, params.bilstm, params.attention_v, params.dropout,
                         train_mode, rng);
}

EncodedPair encode_labels(Graph& g, const std::vector<int64_t>& label_indices,
                          const LabelEncoderParams& params) {
  if (label_indices.empty()) throw Error("encode_labels: empty label list");
  const int64_t num_labels = params.embeddings.shape()[0];
  std::vector<Tensor> inputs;
  inputs.reserve(label_indices.size());
  for (int64_t idx : label_indices) {
    if (idx < 0 || idx >= num_labels)
      throw Error("encode_labels: label index " + std::to_string(idx) +
                  " outside inventory of " + std::to_string(num_labels));
    inputs.push_back(g.row(params.embeddings, idx));
  }
  // No dropout on the label side, so this Rng is never consumed.
  Rng unused(0);
  return encode_sequence(g, inputs, params.bilstm, params.attention_v, 0.0, false, unused);
}

}  // namespace clslu
