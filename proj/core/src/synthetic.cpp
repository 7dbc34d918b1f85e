#include "clslu/synthetic.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <set>

namespace clslu {

namespace {

struct TemplatePart {
  int carrier = -1;            // index into the carrier word list, or
  std::string slot_type;       // a slot placeholder filled with 1-2 pool words
  bool optional = false;
};

struct UtteranceTemplate {
  std::string intent;
  std::vector<TemplatePart> parts;
};

const std::vector<std::string>& slot_types() {
  static const std::vector<std::string> kTypes = {"time", "location", "date", "todo",
                                                  "duration"};
  return kTypes;
}

std::vector<UtteranceTemplate> make_templates() {
  auto carrier = [](int i) { return TemplatePart{i, "", false}; };
  auto slot = [](const char* t, bool opt = false) { return TemplatePart{-1, t, opt}; };
  return {
      {"set_alarm", {carrier(0), carrier(1), slot("time")}},
      {"cancel_alarm", {carrier(2), carrier(3), carrier(4)}},
      {"check_weather", {carrier(5), carrier(6), slot("location"), slot("date", true)}},
      {"set_reminder", {carrier(7), carrier(8), slot("todo"), carrier(9), slot("date")}},
      {"ask_time", {carrier(10), carrier(11), slot("location", true)}},
      {"set_timer", {carrier(12), carrier(13), slot("duration")}},
  };
}

constexpr int kCarrierCount = 14;

std::string src_word(int64_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%03" PRId64, i);
  return buf;
}

std::string trg_word(int64_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "z%03" PRId64, i);
  return buf;
}

Utterance instantiate(const UtteranceTemplate& tpl,
                      const std::map<std::string, std::vector<int64_t>>& pools,
                      const std::string& language, Rng& rng) {
  Utterance u;
  u.intent = tpl.intent;
  u.language = language;
  for (const auto& part : tpl.parts) {
    if (part.optional && rng.uniform() < 0.5) continue;
    if (part.carrier >= 0) {
      u.tokens.push_back(src_word(part.carrier));
      u.slots.push_back("O");
    } else {
      const auto& pool = pools.at(part.slot_type);
      const int64_t len = 1 + rng.uniform_int(2);
      for (int64_t k = 0; k < len; ++k) {
        u.tokens.push_back(src_word(pool[static_cast<size_t>(rng.uniform_int(
            static_cast<int64_t>(pool.size())))]));
        u.slots.push_back((k == 0 ? "B-" : "I-") + part.slot_type);
      }
    }
  }
  return u;
}

// Swap adjacent label chunks (whole spans or single O tokens) so BIO
// sequences stay valid under reordering.
void perturb_order(Utterance& u, double prob, Rng& rng) {
  if (prob <= 0.0) return;
  std::vector<std::pair<size_t, size_t>> chunks;  // [start, end)
  size_t i = 0;
  while (i < u.tokens.size()) {
    size_t j = i + 1;
    if (u.slots[i][0] == 'B') {
      while (j < u.tokens.size() && u.slots[j][0] == 'I') ++j;
    }
    chunks.emplace_back(i, j);
    i = j;
  }
  for (size_t c = 0; c + 1 < chunks.size(); ++c) {
    if (rng.uniform() >= prob) continue;
    std::vector<std::string> tokens, slots;
    auto push_range = [&](std::pair<size_t, size_t> r) {
      for (size_t k = r.first; k < r.second; ++k) {
        tokens.push_back(u.tokens[k]);
        slots.push_back(u.slots[k]);
      }
    };
    for (size_t k = 0; k < chunks[c].first; ++k) {
      tokens.push_back(u.tokens[k]);
      slots.push_back(u.slots[k]);
    }
    push_range(chunks[c + 1]);
    push_range(chunks[c]);
    for (size_t k = chunks[c + 1].second; k < u.tokens.size(); ++k) {
      tokens.push_back(u.tokens[k]);
      slots.push_back(u.slots[k]);
    }
    u.tokens = std::move(tokens);
    u.slots = std::move(slots);
    // Recompute chunk boundaries after the swap.
    const size_t lo = chunks[c].first;
    const size_t len1 = chunks[c + 1].second - chunks[c + 1].first;
    const size_t len0 = chunks[c].second - chunks[c].first;
    chunks[c] = {lo, lo + len1};
    chunks[c + 1] = {lo + len1, lo + len1 + len0};
  }
}

}  // namespace

SynthOutput make_synthetic_pair(const SynthConfig& config, Rng& rng) {
  const auto templates = make_templates();
  const int64_t min_vocab =
      kCarrierCount + 4 * static_cast<int64_t>(slot_types().size());
  if (config.vocab_size < min_vocab)
    throw Error("make_synthetic_pair: vocab_size " + std::to_string(config.vocab_size) +
                " smaller than template needs (" + std::to_string(min_vocab) + ")");

  // Words [0, kCarrierCount) are template carriers; the rest is split into
  // one value pool per slot type.
  std::map<std::string, std::vector<int64_t>> pools;
  const int64_t pool_words = config.vocab_size - kCarrierCount;
  const int64_t per_pool = pool_words / static_cast<int64_t>(slot_types().size());
  int64_t next = kCarrierCount;
  for (size_t t = 0; t < slot_types().size(); ++t) {
    const int64_t count =
        t + 1 == slot_types().size() ? config.vocab_size - next : per_pool;
    std::vector<int64_t> pool;
    for (int64_t k = 0; k < count; ++k) pool.push_back(next++);
    pools.emplace(slot_types()[t], std::move(pool));
  }

  std::map<std::string, std::string> cipher;
  for (int64_t i = 0; i < config.vocab_size; ++i) cipher.emplace(src_word(i), trg_word(i));

  SplitSet src_splits, trg_splits;
  const std::pair<std::vector<Utterance> SplitSet::*, int64_t> split_plan[] = {
      {&SplitSet::train, config.train_count},
      {&SplitSet::valid, config.valid_count},
      {&SplitSet::test, config.test_count},
  };
  for (const auto& [member, count] : split_plan) {
    for (int64_t i = 0; i < count; ++i) {
      const auto& tpl =
          templates[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(templates.size())))];
      Utterance src = instantiate(tpl, pools, config.source_lang, rng);
      Utterance trg = src;
      trg.language = config.target_lang;
      for (auto& tok : trg.tokens) tok = cipher.at(tok);
      perturb_order(trg, config.order_perturb_prob, rng);
      (src_splits.*member).push_back(std::move(src));
      (trg_splits.*member).push_back(std::move(trg));
    }
  }

  std::set<std::string> slot_set, intent_set;
  for (const auto& t : slot_types()) {
    slot_set.insert("B-" + t);
    slot_set.insert("I-" + t);
  }
  slot_set.insert("O");
  for (const auto& tpl : templates) intent_set.insert(tpl.intent);

  std::map<std::string, SplitSet> by_language;
  by_language.emplace(config.source_lang, std::move(src_splits));
  by_language.emplace(config.target_lang, std::move(trg_splits));
  Corpus corpus(std::move(by_language),
                std::vector<std::string>(slot_set.begin(), slot_set.end()),
                std::vector<std::string>(intent_set.begin(), intent_set.end()));

  // Source vectors are unit-scale Gaussian; each cipher twin is its source
  // vector plus noise_sigma-scaled Gaussian noise.
  EmbeddingTable table(config.emb_dim);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(config.emb_dim));
  for (int64_t i = 0; i < config.vocab_size; ++i) {
    std::vector<double> v(static_cast<size_t>(config.emb_dim));
    for (auto& x : v) x = rng.normal() * inv_sqrt_d;
    std::vector<double> w = v;
    if (config.noise_sigma > 0.0)
      for (auto& x : w) x += config.noise_sigma * rng.normal() * inv_sqrt_d;
    table.insert(src_word(i), std::move(v));
    table.insert(trg_word(i), std::move(w));
  }

  return SynthOutput{std::move(corpus), std::move(table), std::move(cipher)};
}

}  // namespace clslu
