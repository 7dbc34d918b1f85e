#include "clslu/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace clslu {

namespace {

const char* kSplitNames[] = {"train", "valid", "test"};

bool is_bio_label(const std::string& s) {
  if (s == "O") return true;
  return s.size() > 2 && (s[0] == 'B' || s[0] == 'I') && s[1] == '-';
}

std::string bio_type(const std::string& s) { return s.substr(2); }

}  // namespace

Corpus::Corpus(std::map<std::string, SplitSet> by_language,
               std::vector<std::string> slot_labels, std::vector<std::string> intent_labels)
    : by_language_(std::move(by_language)),
      slot_labels_(std::move(slot_labels)),
      intent_labels_(std::move(intent_labels)) {}

std::vector<std::string> Corpus::languages() const {
  std::vector<std::string> out;
  for (const auto& [lang, _] : by_language_) out.push_back(lang);
  return out;
}

bool Corpus::has_language(const std::string& lang) const {
  return by_language_.count(lang) > 0;
}

const SplitSet& Corpus::splits(const std::string& lang) const {
  auto it = by_language_.find(lang);
  if (it == by_language_.end()) throw Error("corpus: unknown language '" + lang + "'");
  return it->second;
}

const std::vector<Utterance>& Corpus::train(const std::string& lang) const {
  ++train_reads_[lang];
  return splits(lang).train;
}

const std::vector<Utterance>& Corpus::valid(const std::string& lang) const {
  return splits(lang).valid;
}

const std::vector<Utterance>& Corpus::test(const std::string& lang) const {
  return splits(lang).test;
}

int64_t Corpus::slot_index(const std::string& label) const {
  auto it = std::lower_bound(slot_labels_.begin(), slot_labels_.end(), label);
  if (it == slot_labels_.end() || *it != label)
    throw Error("corpus: slot label '" + label + "' not in inventory");
  return it - slot_labels_.begin();
}

int64_t Corpus::intent_index(const std::string& label) const {
  auto it = std::lower_bound(intent_labels_.begin(), intent_labels_.end(), label);
  if (it == intent_labels_.end() || *it != label)
    throw Error("corpus: intent label '" + label + "' not in inventory");
  return it - intent_labels_.begin();
}

size_t Corpus::train_read_count(const std::string& lang) const {
  auto it = train_reads_.find(lang);
  return it == train_reads_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

Utterance parse_utterance_line(const std::string& line, const std::string& file,
                               size_t line_no, const std::string& language,
                               size_t* repairs) {
  const size_t tab = line.find('\t');
  if (tab == std::string::npos)
    throw ParseError(file, line_no, "missing tab before intent field");
  const std::string left = line.substr(0, tab);
  const std::string right = line.substr(tab + 1);
  if (right.rfind("intent=", 0) != 0)
    throw ParseError(file, line_no, "intent field must look like intent=<label>");

  Utterance u;
  u.intent = right.substr(7);
  u.language = language;
  if (u.intent.empty()) throw ParseError(file, line_no, "empty intent label");

  std::istringstream ts(left);
  std::string pair;
  while (ts >> pair) {
    // Split at the last colon so tokens like "7:30" survive.
    const size_t colon = pair.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == pair.size())
      throw ParseError(file, line_no,
                       "token/label count mismatch in '" + pair + "' (expected token:BIO)");
    u.tokens.push_back(pair.substr(0, colon));
    u.slots.push_back(pair.substr(colon + 1));
    if (!is_bio_label(u.slots.back()))
      throw ParseError(file, line_no, "malformed BIO label '" + u.slots.back() + "'");
  }
  if (u.tokens.empty()) throw ParseError(file, line_no, "utterance has no tokens");

  // Normalize: I-X continuing nothing (or a different type) becomes B-X.
  for (size_t i = 0; i < u.slots.size(); ++i) {
    if (u.slots[i][0] != 'I') continue;
    const std::string type = bio_type(u.slots[i]);
    const bool continues = i > 0 && u.slots[i - 1] != "O" && bio_type(u.slots[i - 1]) == type;
    if (!continues) {
      u.slots[i] = "B-" + type;
      if (repairs) ++*repairs;
    }
  }
  return u;
}

std::string format_utterance_line(const Utterance& u) {
  std::ostringstream os;
  for (size_t i = 0; i < u.tokens.size(); ++i) {
    if (i) os << ' ';
    os << u.tokens[i] << ':' << u.slots[i];
  }
  os << "\tintent=" << u.intent;
  return os.str();
}

Corpus load_corpus(const std::filesystem::path& dir, const std::string& format,
                   LoadStats* stats) {
  if (format != "tsv") throw Error("load_corpus: unknown format '" + format + "'");

  // Discover languages from "<lang>.train.tsv" style names.
  std::set<std::string> langs;
  if (std::filesystem::is_directory(dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      for (const char* split : kSplitNames) {
        const std::string suffix = std::string(".") + split + ".tsv";
        if (name.size() > suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
          langs.insert(name.substr(0, name.size() - suffix.size()));
      }
    }
  }
  if (langs.empty())
    throw Error("load_corpus: missing split: no <lang>.<split>.tsv files under " + dir.string());

  LoadStats local;
  std::map<std::string, SplitSet> by_language;
  std::set<std::string> slot_set, intent_set;
  for (const auto& lang : langs) {
    SplitSet splits;
    for (const char* split : kSplitNames) {
      const auto path = dir / (lang + "." + split + ".tsv");
      std::ifstream in(path);
      if (!in) throw Error("load_corpus: missing split " + path.string());
      std::vector<Utterance>& dst = split == kSplitNames[0]   ? splits.train
                                    : split == kSplitNames[1] ? splits.valid
                                                              : splits.test;
      std::string line;
      size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Utterance u = parse_utterance_line(line, path.string(), line_no, lang,
                                           &local.bio_repairs);
        for (const auto& s : u.slots) slot_set.insert(s);
        intent_set.insert(u.intent);
        dst.push_back(std::move(u));
        ++local.utterances;
      }
    }
    by_language.emplace(lang, std::move(splits));
  }
  if (stats) *stats = local;
  return Corpus(std::move(by_language),
                std::vector<std::string>(slot_set.begin(), slot_set.end()),
                std::vector<std::string>(intent_set.begin(), intent_set.end()));
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& lang : corpus.languages()) {
    for (const char* split : kSplitNames) {
      const std::vector<Utterance>& utts = split == kSplitNames[0]   ? corpus.train(lang)
                                           : split == kSplitNames[1] ? corpus.valid(lang)
                                                                     : corpus.test(lang);
      std::ofstream out(dir / (lang + "." + split + ".tsv"));
      if (!out) throw Error("write_corpus: cannot open output under " + dir.string());
      for (const auto& u : utts) out << format_utterance_line(u) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Delexicalization
// ---------------------------------------------------------------------------

namespace {

bool all_digits(const std::string& s, size_t from, size_t to) {
  if (from >= to) return false;
  for (size_t i = from; i < to; ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

// Decimal integer or float: digits with at most one '.' or ',' separator.
bool is_number_token(const std::string& s) {
  if (s.empty()) return false;
  const size_t sep = s.find_first_of(".,");
  if (sep == std::string::npos) return all_digits(s, 0, s.size());
  return all_digits(s, 0, sep) && all_digits(s, sep + 1, s.size());
}

std::string lower(const std::string& s) {
  std::string out = s;
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_time_unit(const std::string& s) {
  const std::string l = lower(s);
  return l == "am" || l == "pm" || l == "o'clock" || l == "oclock";
}

bool is_duration_unit(const std::string& s) {
  const std::string l = lower(s);
  return l == "second" || l == "seconds" || l == "minute" || l == "minutes" ||
         l == "hour" || l == "hours" || l == "day" || l == "days";
}

// "7:30", "23:59:01", "7am", "11pm".
bool is_clock_token(const std::string& s) {
  const size_t c1 = s.find(':');
  if (c1 != std::string::npos) {
    const size_t c2 = s.find(':', c1 + 1);
    if (c1 == 0 || c1 > 2 || !all_digits(s, 0, c1)) return false;
    if (c2 == std::string::npos) return s.size() == c1 + 3 && all_digits(s, c1 + 1, s.size());
    return c2 == c1 + 3 && all_digits(s, c1 + 1, c2) && s.size() == c2 + 3 &&
           all_digits(s, c2 + 1, s.size());
  }
  const std::string l = lower(s);
  if (l.size() >= 3 && (l.compare(l.size() - 2, 2, "am") == 0 ||
                        l.compare(l.size() - 2, 2, "pm") == 0))
    return l.size() <= 4 && all_digits(l, 0, l.size() - 2);
  return false;
}

}  // namespace

Utterance delexicalize(const Utterance& u) {
  Utterance out = u;
  size_t i = 0;
  while (i < out.tokens.size()) {
    const std::string& tok = out.tokens[i];
    if (i + 1 < out.tokens.size() && is_number_token(tok)) {
      if (is_time_unit(out.tokens[i + 1])) {
        out.tokens[i] = "[TIME]";
        out.tokens[i + 1] = "[TIME]";
        i += 2;
        continue;
      }
      if (is_duration_unit(out.tokens[i + 1])) {
        out.tokens[i] = "[DUR]";
        out.tokens[i + 1] = "[DUR]";
        i += 2;
        continue;
      }
    }
    if (is_clock_token(tok)) {
      out.tokens[i] = "[TIME]";
    } else if (is_number_token(tok)) {
      out.tokens[i] = "[NUM]";
    }
    ++i;
  }
  return out;
}

Corpus map_utterances(const Corpus& corpus, Utterance (*fn)(const Utterance&)) {
  std::map<std::string, SplitSet> by_language;
  for (const auto& [lang, splits] : corpus.by_language_) {
    SplitSet mapped;
    for (const auto& u : splits.train) mapped.train.push_back(fn(u));
    for (const auto& u : splits.valid) mapped.valid.push_back(fn(u));
    for (const auto& u : splits.test) mapped.test.push_back(fn(u));
    by_language.emplace(lang, std::move(mapped));
  }
  return Corpus(std::move(by_language), corpus.slot_labels_, corpus.intent_labels_);
}

Corpus delexicalize(const Corpus& corpus) {
  return map_utterances(corpus, [](const Utterance& u) { return delexicalize(u); });
}

// ---------------------------------------------------------------------------
// Few-shot subsampling
// ---------------------------------------------------------------------------

Corpus few_shot_subsample(const Corpus& corpus, const std::string& target_lang,
                          double fraction, Rng& rng) {
  if (fraction < 0.0 || fraction > 1.0)
    throw Error("few_shot_subsample: fraction " + std::to_string(fraction) +
                " outside [0, 1]");
  Corpus out = corpus;
  out.train_reads_.clear();
  auto it = out.by_language_.find(target_lang);
  if (it == out.by_language_.end())
    throw Error("few_shot_subsample: unknown language '" + target_lang + "'");
  auto& train = it->second.train;
  const size_t n = train.size();
  // floor(fraction * n): reproduces the published sample counts from the
  // full split sizes (e.g. 3617 -> 36 at 1%, 2156 -> 64 at 3%).
  const size_t k = static_cast<size_t>(fraction * static_cast<double>(n));

  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(n - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());

  std::vector<Utterance> kept;
  kept.reserve(k);
  for (size_t i : idx) kept.push_back(train[i]);
  train = std::move(kept);
  return out;
}

}  // namespace clslu
