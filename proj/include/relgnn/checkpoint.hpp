#pragma once

#include <string>

#include "relgnn/model.hpp"

namespace relgnn {

struct Checkpoint {
    ModelConfig config;
    ModelParameters params;
};

/// Binary container: "RELGNNCK", u32 version, length-prefixed model config
/// text, then named arrays with (rows, cols) headers and little-endian
/// float64 payloads.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source = "<checkpoint>");

}  // namespace relgnn
