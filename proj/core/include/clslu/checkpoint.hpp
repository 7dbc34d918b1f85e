#pragma once

#include <filesystem>

#include "clslu/model.hpp"

namespace clslu {

// Binary container, fixed little-endian layout, byte-identical for
// identical models:
//
//   magic  "CLSLUCP1"
//   u32 meta_count, then meta_count x (string key, string value)
//   u32 tensor_count, then per tensor:
//     string name, u32 rank, u64 dims[rank], f64 values[numel]
//
// Strings are u32 length + bytes. Doubles are stored as their IEEE-754
// bit pattern. Metadata carries the model dims and label inventories so a
// checkpoint reloads without the original config.
void save_checkpoint(const std::filesystem::path& path, const SluModel& model);
SluModel load_checkpoint(const std::filesystem::path& path);

}  // namespace clslu
