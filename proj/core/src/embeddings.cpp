#include "clslu/embeddings.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "clslu/data.hpp"

namespace clslu {

namespace {
const char* kSpecials[] = {EmbeddingTable::kUnknown, EmbeddingTable::kPadding,
                           "[NUM]", "[TIME]", "[DUR]"};
}

EmbeddingTable::EmbeddingTable(int64_t dim) : dim_(dim), zero_(static_cast<size_t>(dim), 0.0) {
  inject_specials();
}

void EmbeddingTable::inject_specials() {
  for (const char* s : kSpecials)
    if (!vectors_.count(s)) insert(s, zero_);
}

void EmbeddingTable::insert(const std::string& word, std::vector<double> vec) {
  if (static_cast<int64_t>(vec.size()) != dim_)
    throw Error("EmbeddingTable::insert: vector for '" + word + "' has dimension " +
                std::to_string(vec.size()) + ", table has " + std::to_string(dim_));
  auto [it, added] = vectors_.emplace(word, std::move(vec));
  if (added)
    order_.push_back(word);
  else
    throw Error("EmbeddingTable::insert: duplicate word '" + word + "'");
}

std::span<const double> EmbeddingTable::lookup(const std::string& word) const {
  auto it = vectors_.find(word);
  if (it == vectors_.end()) return zero_;
  return it->second;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("EmbeddingTable::load: cannot open " + path.string());

  EmbeddingTable table;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    std::vector<double> vec;
    double v;
    while (ls >> v) vec.push_back(v);
    if (vec.empty())
      throw ParseError(path.string(), line_no, "no vector components for '" + word + "'");
    if (table.dim_ == 0) {
      table.dim_ = static_cast<int64_t>(vec.size());
      table.zero_.assign(vec.size(), 0.0);
    } else if (static_cast<int64_t>(vec.size()) != table.dim_) {
      throw ParseError(path.string(), line_no,
                       "dimension " + std::to_string(vec.size()) + " does not match " +
                           std::to_string(table.dim_) + " from line 1");
    }
    table.insert(word, std::move(vec));
  }
  if (table.dim_ == 0) throw Error("EmbeddingTable::load: empty file " + path.string());
  table.inject_specials();
  return table;
}

void EmbeddingTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("EmbeddingTable::save: cannot open " + path.string());
  char buf[64];
  for (const auto& word : order_) {
    out << word;
    for (double v : vectors_.at(word)) {
      std::snprintf(buf, sizeof buf, " %.9g", v);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace clslu
