#pragma once

#include <map>
#include <string>

#include "clslu/data.hpp"
#include "clslu/embeddings.hpp"
#include "clslu/rng.hpp"

namespace clslu {

// Desk-scale stand-in for a real cross-lingual corpus: a templated source
// language plus a target language built from a bijective token cipher.
// Cipher-pair embeddings are the source vectors plus Gaussian noise of
// strength noise_sigma, modeling imperfect cross-lingual alignment;
// order_perturb_prob swaps adjacent label chunks so the target word order
// drifts while BIO sequences stay well formed.
struct SynthConfig {
  int64_t vocab_size = 200;
  int64_t train_count = 600;
  int64_t valid_count = 100;
  int64_t test_count = 200;
  double noise_sigma = 0.0;
  double order_perturb_prob = 0.0;
  int64_t emb_dim = 16;
  std::string source_lang = "src";
  std::string target_lang = "trg";
};

struct SynthOutput {
  Corpus corpus;
  EmbeddingTable embeddings;
  std::map<std::string, std::string> cipher;  // source word -> target word
};

SynthOutput make_synthetic_pair(const SynthConfig& config, Rng& rng);

}  // namespace clslu
