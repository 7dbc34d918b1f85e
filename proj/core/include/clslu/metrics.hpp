#pragma once

#include <map>
#include <string>
#include <vector>

#include "clslu/tensor.hpp"

namespace clslu {

struct SlotTypeScore {
  int64_t gold = 0;     // support
  int64_t pred = 0;
  int64_t matched = 0;  // exact type+boundary matches
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct EvalResult {
  double intent_accuracy = 0.0;
  double slot_precision = 0.0;
  double slot_recall = 0.0;
  double slot_f1 = 0.0;
  std::map<std::string, SlotTypeScore> per_type;
  int64_t gold_spans = 0;
  int64_t pred_spans = 0;
  int64_t matched_spans = 0;
  bool no_spans = false;  // 0/0 convention applied somewhere

  double combined() const { return 0.5 * (intent_accuracy + slot_f1); }
};

// Micro-averaged exact-match span F1 over BIO sequences. A span is a
// maximal B-X (I-X)* run; an I-X that does not continue a span of the same
// type opens a new span (same normalization as the corpus loader).
// Precision and recall are 0 when their denominators are 0 (flagged).
EvalResult bio_f1(const std::vector<std::vector<std::string>>& gold,
                  const std::vector<std::vector<std::string>>& pred);

// Independent reference scorer: quadratic scan that tests every candidate
// (start, end, type) range against the definition above. Must agree with
// bio_f1 exactly; exists so the fast scorer can be cross-checked.
EvalResult brute_force_f1_oracle(const std::vector<std::vector<std::string>>& gold,
                                 const std::vector<std::vector<std::string>>& pred);

// Exact-match fraction. Errors on empty or mismatched inputs.
double intent_accuracy(const std::vector<std::string>& gold,
                       const std::vector<std::string>& pred);

}  // namespace clslu
