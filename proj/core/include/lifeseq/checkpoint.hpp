#pragma once

#include <string>

#include "lifeseq/model.hpp"

namespace lifeseq {

// Binary checkpoint: header (magic, format version, config hash, vocab hash,
// step counter) followed by named tensors with explicit shapes, little-endian
// 64-bit floats. Writes go to a temp file and are renamed into place, so an
// interrupted save never leaves a partial checkpoint behind.
struct CheckpointInfo {
    std::uint64_t config_hash = 0;
    std::uint64_t vocab_hash = 0;
    std::uint64_t step = 0;
};

void save_checkpoint(const std::string& path, Model& model, std::uint64_t vocab_hash,
                     std::uint64_t step);

// Loads into an already-constructed model; verifies config and vocab hashes
// and every tensor shape.
CheckpointInfo load_checkpoint(const std::string& path, Model& model, std::uint64_t vocab_hash);

// Header peek without loading tensors (CLI validation).
CheckpointInfo read_checkpoint_header(const std::string& path);

}  // namespace lifeseq
