#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "clslu/tensor.hpp"

namespace clslu {

// Frozen word-vector table. Lookups of absent words yield the zero vector,
// which keeps every out-of-vocabulary path non-trainable.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(int64_t dim);

  static constexpr const char* kUnknown = "<unk>";
  static constexpr const char* kPadding = "<pad>";

  // Word2vec-style text, one "word v1 v2 ... vd" entry per line, no header.
  // Special tokens (<unk>, <pad>, [NUM], [TIME], [DUR]) are injected as
  // zero vectors when the file does not provide them.
  static EmbeddingTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int64_t dim() const { return dim_; }
  size_t size() const { return vectors_.size(); }
  bool contains(const std::string& word) const { return vectors_.count(word) > 0; }

  // Zero vector for unknown words.
  std::span<const double> lookup(const std::string& word) const;

  void insert(const std::string& word, std::vector<double> vec);

  const std::vector<std::string>& words() const { return order_; }

 private:
  void inject_specials();

  int64_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::vector<std::string> order_;  // insertion order, for deterministic save
  std::vector<double> zero_;
};

}  // namespace clslu
