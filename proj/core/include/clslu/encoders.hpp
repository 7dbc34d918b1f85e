#pragma once

#include <string>
#include <vector>

#include "clslu/embeddings.hpp"
#include "clslu/tensor.hpp"

namespace clslu {

// One LSTM direction: standard input/forget/output gates with a tanh
// candidate, gate order [i, f, g, o] in the stacked weight rows.
struct LstmParams {
  Tensor w_x;  // {4H, input}
  Tensor w_h;  // {4H, H}
  Tensor b;    // {4H}, forget-gate block initialized to 1
  int64_t hidden = 0;
};

struct BiLstmParams {
  std::vector<LstmParams> fwd;  // one per layer
  std::vector<LstmParams> bwd;
  int64_t hidden = 0;  // per direction
  int64_t layers() const { return static_cast<int64_t>(fwd.size()); }
};

// Utterance side: frozen word vectors in, 2-layer BiLSTM, attention pooling.
struct UtteranceEncoderParams {
  BiLstmParams bilstm;
  Tensor attention_v;  // {2H}
  double dropout = 0.1;
};

// Label side: trainable label embeddings, 1-layer BiLSTM, attention pooling.
// No parameters are shared with the utterance side.
struct LabelEncoderParams {
  Tensor embeddings;  // {num_labels, emb_dim}, trainable
  BiLstmParams bilstm;
  Tensor attention_v;
};

struct EncoderParams {
  UtteranceEncoderParams utterance;
  LabelEncoderParams label;
};

struct EncoderDims {
  int64_t utter_hidden = 250;
  int64_t utter_layers = 2;
  int64_t label_emb = 100;
  int64_t label_hidden = 150;
  double dropout = 0.1;
};

EncoderParams init_encoder_params(const EncoderDims& dims, int64_t word_emb_dim,
                                  int64_t num_labels, Rng& rng);

// Hidden states, attention weights and the attention-weighted pooled vector
// (pooled == sum_i alpha_i * h_i by construction).
struct EncodedPair {
  std::vector<Tensor> hidden;  // n tensors of {2H}
  Tensor hidden_matrix;        // {n, 2H}
  Tensor attention;            // {n}, nonnegative, sums to 1
  Tensor pooled;               // {2H}
};

// Runs the BiLSTM stack over per-timestep input vectors and pools with
// attention. Dropout (if configured) applies between layers and on the
// final states, train mode only.
EncodedPair encode_sequence(Graph& g, const std::vector<Tensor>& inputs,
                            const BiLstmParams& bilstm, const Tensor& attention_v,
                            double dropout, bool train_mode, Rng& rng);

EncodedPair encode_utterance(Graph& g, const std::vector<std::string>& tokens,
                             const EmbeddingTable& table,
                             const UtteranceEncoderParams& params, bool train_mode,
                             Rng& rng);

// label_indices maps each BIO label to its embedding row.
EncodedPair encode_labels(Graph& g, const std::vector<int64_t>& label_indices,
                          const LabelEncoderParams& params);

}  // namespace clslu
