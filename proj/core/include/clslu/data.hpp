#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "clslu/rng.hpp"
#include "clslu/tensor.hpp"

namespace clslu {

// Parse failure with file and line context.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what) {}
};

struct Utterance {
  std::vector<std::string> tokens;
  std::vector<std::string> slots;  // BIO labels, one per token
  std::string intent;
  std::string language;
};

struct SplitSet {
  std::vector<Utterance> train, valid, test;
};

// Immutable after construction. Reads of per-language train splits are
// counted so tests can assert the zero-shot regime never touches target
// training data.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::map<std::string, SplitSet> by_language,
         std::vector<std::string> slot_labels, std::vector<std::string> intent_labels);

  std::vector<std::string> languages() const;
  bool has_language(const std::string& lang) const;

  const std::vector<Utterance>& train(const std::string& lang) const;
  const std::vector<Utterance>& valid(const std::string& lang) const;
  const std::vector<Utterance>& test(const std::string& lang) const;

  // Full BIO tag inventory (includes "O"), sorted; identical across languages.
  const std::vector<std::string>& slot_labels() const { return slot_labels_; }
  const std::vector<std::string>& intent_labels() const { return intent_labels_; }

  int64_t slot_index(const std::string& label) const;
  int64_t intent_index(const std::string& label) const;

  size_t train_read_count(const std::string& lang) const;

 private:
  friend Corpus few_shot_subsample(const Corpus&, const std::string&, double, Rng&);
  friend Corpus map_utterances(const Corpus&, Utterance (*)(const Utterance&));
  const SplitSet& splits(const std::string& lang) const;

  std::map<std::string, SplitSet> by_language_;
  std::vector<std::string> slot_labels_, intent_labels_;
  mutable std::map<std::string, size_t> train_reads_;
};

struct LoadStats {
  size_t utterances = 0;
  size_t bio_repairs = 0;  // I-X after an incompatible prefix, rewritten to B-X
};

// Reads {lang}.{train|valid|test}.tsv files from a directory. Each line is
// one utterance: space-separated token:BIO pairs, a tab, then
// "intent=<label>". BIO sequences are normalized (orphan I-X becomes B-X)
// and repairs are counted in stats.
Corpus load_corpus(const std::filesystem::path& dir, const std::string& format = "tsv",
                   LoadStats* stats = nullptr);

// Writes a corpus back in the load_corpus file format.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

std::string format_utterance_line(const Utterance& u);
Utterance parse_utterance_line(const std::string& line, const std::string& file,
                               size_t line_no, const std::string& language,
                               size_t* repairs);

// Replaces number, time, and duration tokens with [NUM], [TIME], [DUR].
// Longest match first: (number, am|pm|o'clock) and (number, unit) bigrams
// before clock-pattern and bare-number unigrams. Slots are untouched.
Utterance delexicalize(const Utterance& u);
Corpus delexicalize(const Corpus& corpus);

// Uniform subsample (without replacement) of the target-language train
// split down to floor(fraction * size). fraction 0 empties the split
// (zero-shot); other splits and languages are unchanged.
Corpus few_shot_subsample(const Corpus& corpus, const std::string& target_lang,
                          double fraction, Rng& rng);

}  // namespace clslu
