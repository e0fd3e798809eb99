#pragma once

// Binary checkpoint, little-endian:
//
//   magic      8 bytes  "CNCKPT01"
//   header     u32 byte length, then `key = value` text (ModelConfig)
//   iteration  i64
//   adam_step  i64
//   count      u32 number of parameters
//   per parameter:
//     u32 name length, name bytes
//     u32 rows, u32 cols
//     rows*cols f64 value, row-major
//     rows*cols f64 Adam first moment, row-major
//     rows*cols f64 Adam second moment, row-major
//
// Doubles are stored bit-exactly, so save/load is lossless.

#include <filesystem>
#include <string>

#include "canonica/fields/scene_model.hpp"

namespace canonica::fields {

std::string serialize_checkpoint(const SceneModel& model);
SceneModel deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const SceneModel& model, const std::filesystem::path& path);
SceneModel load_checkpoint(const std::filesystem::path& path);

}  // namespace canonica::fields
