#include "clslu/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace clslu {

namespace {

constexpr char kMagic[8] = {'C', 'L', 'S', 'L', 'U', 'C', 'P', '1'};
constexpr char kListSep = '\x1f';

void put_u32(std::ostream& os, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<uint64_t>(v)); }

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw Error("checkpoint: truncated file");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw Error("checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

std::string get_string(std::istream& is) {
  const uint32_t len = get_u32(is);
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw Error("checkpoint: truncated file");
  return s;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += kListSep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == kListSep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const SluModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("save_checkpoint: cannot open " + path.string());
  os.write(kMagic, sizeof kMagic);

  const std::vector<std::pair<std::string, std::string>> meta = {
      {"utter_hidden", std::to_string(model.dims.utter_hidden)},
      {"utter_layers", std::to_string(model.dims.utter_layers)},
      {"label_emb", std::to_string(model.dims.label_emb)},
      {"label_hidden", std::to_string(model.dims.label_hidden)},
      {"latent", std::to_string(model.dims.latent)},
      {"dropout", fmt_double(model.dims.dropout)},
      {"word_emb_dim", std::to_string(model.word_emb_dim)},
      {"slot_labels", join(model.slot_labels)},
      {"intent_labels", join(model.intent_labels)},
  };
  put_u32(os, static_cast<uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    put_string(os, k);
    put_string(os, v);
  }

  const NamedTensors params = model.all_params();
  put_u32(os, static_cast<uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    put_string(os, name);
    put_u32(os, static_cast<uint32_t>(t.shape().size()));
    for (int64_t d : t.shape()) put_u64(os, static_cast<uint64_t>(d));
    for (double v : t.values()) put_f64(os, v);
  }
  if (!os) throw Error("save_checkpoint: write failed for " + path.string());
}

SluModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("load_checkpoint: cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::string(magic, 8) != std::string(kMagic, 8))
    throw Error("load_checkpoint: " + path.string() + " is not a checkpoint file");

  std::map<std::string, std::string> meta;
  const uint32_t meta_count = get_u32(is);
  for (uint32_t i = 0; i < meta_count; ++i) {
    std::string k = get_string(is);
    meta[k] = get_string(is);
  }
  auto need = [&](const char* key) {
    auto it = meta.find(key);
    if (it == meta.end())
      throw Error("load_checkpoint: missing metadata key '" + std::string(key) + "'");
    return it->second;
  };

  ModelDims dims;
  dims.utter_hidden = std::stoll(need("utter_hidden"));
  dims.utter_layers = std::stoll(need("utter_layers"));
  dims.label_emb = std::stoll(need("label_emb"));
  dims.label_hidden = std::stoll(need("label_hidden"));
  dims.latent = std::stoll(need("latent"));
  dims.dropout = std::stod(need("dropout"));

  Rng rng(0);  // placeholder values, overwritten below
  SluModel model = SluModel::init(dims, std::stoll(need("word_emb_dim")),
                                  split_list(need("slot_labels")),
                                  split_list(need("intent_labels")), rng);

  std::map<std::string, Tensor> by_name;
  for (auto& [name, t] : model.all_params()) by_name.emplace(name, t);

  const uint32_t tensor_count = get_u32(is);
  std::map<std::string, bool> seen;
  for (uint32_t i = 0; i < tensor_count; ++i) {
    const std::string name = get_string(is);
    const uint32_t rank = get_u32(is);
    Shape shape;
    for (uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int64_t>(get_u64(is)));
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw Error("load_checkpoint: unknown tensor '" + name + "'");
    if (it->second.shape() != shape)
      throw ShapeError("load_checkpoint(" + name + ")", it->second.shape(), shape);
    auto vals = it->second.mutable_values();
    for (auto& v : vals) v = std::bit_cast<double>(get_u64(is));
    seen[name] = true;
  }
  for (const auto& [name, _] : by_name)
    if (!seen.count(name)) throw Error("load_checkpoint: tensor '" + name + "' missing");
  return model;
}

}  // namespace clslu
