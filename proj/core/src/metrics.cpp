#include "clslu/metrics.hpp"

#include <set>
#include <tuple>

namespace clslu {

namespace {

using Span = std::tuple<size_t, size_t, size_t, std::string>;  // seq, start, end, type

void check_lengths(const std::vector<std::vector<std::string>>& gold,
                   const std::vector<std::vector<std::string>>& pred) {
  if (gold.size() != pred.size())
    throw Error("bio_f1: " + std::to_string(gold.size()) + " gold vs " +
                std::to_string(pred.size()) + " predicted sequences");
  for (size_t i = 0; i < gold.size(); ++i)
    if (gold[i].size() != pred[i].size())
      throw Error("bio_f1: length mismatch in sequence " + std::to_string(i) + " (" +
                  std::to_string(gold[i].size()) + " vs " + std::to_string(pred[i].size()) +
                  ")");
}

// Left-to-right extraction. An I-X that does not continue a same-type span
// opens a new one, mirroring the loader's BIO normalization.
std::set<Span> extract_spans(const std::vector<std::vector<std::string>>& seqs) {
  std::set<Span> spans;
  for (size_t s = 0; s < seqs.size(); ++s) {
    const auto& labels = seqs[s];
    size_t i = 0;
    while (i < labels.size()) {
      if (labels[i] == "O" || labels[i].size() < 3) {
        ++i;
        continue;
      }
      const std::string type = labels[i].substr(2);
      const size_t start = i++;
      while (i < labels.size() && labels[i].size() >= 3 && labels[i][0] == 'I' &&
             labels[i].substr(2) == type)
        ++i;
      spans.emplace(s, start, i, type);
    }
  }
  return spans;
}

EvalResult score_spans(const std::set<Span>& gold, const std::set<Span>& pred) {
  EvalResult r;
  r.gold_spans = static_cast<int64_t>(gold.size());
  r.pred_spans = static_cast<int64_t>(pred.size());
  for (const auto& sp : gold) ++r.per_type[std::get<3>(sp)].gold;
  for (const auto& sp : pred) {
    ++r.per_type[std::get<3>(sp)].pred;
    if (gold.count(sp)) {
      ++r.matched_spans;
      ++r.per_type[std::get<3>(sp)].matched;
    }
  }
  auto ratio = [&](int64_t num, int64_t den) {
    if (den == 0) {
      r.no_spans = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.slot_precision = ratio(r.matched_spans, r.pred_spans);
  r.slot_recall = ratio(r.matched_spans, r.gold_spans);
  r.slot_f1 = r.slot_precision + r.slot_recall > 0.0
                  ? 2.0 * r.slot_precision * r.slot_recall /
                        (r.slot_precision + r.slot_recall)
                  : 0.0;
  for (auto& [type, sc] : r.per_type) {
    sc.precision = sc.pred > 0 ? static_cast<double>(sc.matched) / sc.pred : 0.0;
    sc.recall = sc.gold > 0 ? static_cast<double>(sc.matched) / sc.gold : 0.0;
    sc.f1 = sc.precision + sc.recall > 0.0
                ? 2.0 * sc.precision * sc.recall / (sc.precision + sc.recall)
                : 0.0;
  }
  return r;
}

}  // namespace

EvalResult bio_f1(const std::vector<std::vector<std::string>>& gold,
                  const std::vector<std::vector<std::string>>& pred) {
  check_lengths(gold, pred);
  return score_spans(extract_spans(gold), extract_spans(pred));
}

// ---------------------------------------------------------------------------
// Reference scorer, written independently of the pass above.
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> oracle_normalize(const std::vector<std::string>& labels) {
  std::vector<std::string> out = labels;
  for (size_t i = 0; i < out.size(); ++i) {
    if (out[i].size() < 3 || out[i][0] != 'I') continue;
    const std::string type = out[i].substr(2);
    bool continues = false;
    if (i > 0 && out[i - 1].size() >= 3 && out[i - 1].substr(2) == type &&
        (out[i - 1][0] == 'B' || out[i - 1][0] == 'I'))
      continues = true;
    if (!continues) out[i] = "B-" + type;
  }
  return out;
}

// Tests every candidate range against the span definition.
std::set<Span> oracle_spans(const std::vector<std::vector<std::string>>& seqs) {
  std::set<Span> spans;
  for (size_t s = 0; s < seqs.size(); ++s) {
    const std::vector<std::string> labels = oracle_normalize(seqs[s]);
    const size_t n = labels.size();
    for (size_t start = 0; start < n; ++start) {
      if (labels[start].size() < 3 || labels[start][0] != 'B') continue;
      const std::string type = labels[start].substr(2);
      for (size_t end = start + 1; end <= n; ++end) {
        bool interior_ok = true;
        for (size_t k = start + 1; k < end; ++k)
          if (labels[k] != "I-" + type) interior_ok = false;
        const bool maximal = end == n || labels[end] != "I-" + type;
        if (interior_ok && maximal) spans.emplace(s, start, end, type);
      }
    }
  }
  return spans;
}

}  // namespace

EvalResult brute_force_f1_oracle(const std::vector<std::vector<std::string>>& gold,
                                 const std::vector<std::vector<std::string>>& pred) {
  check_lengths(gold, pred);
  return score_spans(oracle_spans(gold), oracle_spans(pred));
}

double intent_accuracy(const std::vector<std::string>& gold,
                       const std::vector<std::string>& pred) {
  if (gold.size() != pred.size())
    throw Error("intent_accuracy: " + std::to_string(gold.size()) + " gold vs " +
                std::to_string(pred.size()) + " predicted labels");
  if (gold.empty()) throw Error("intent_accuracy: no utterances");
  size_t correct = 0;
  for (size_t i = 0; i < gold.size(); ++i)
    if (gold[i] == pred[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

}  // namespace clslu
