#pragma once

#include <string>

#include "medfuse/model.hpp"

namespace medfuse {

// Versioned checkpoint: a JSON header (config echo, vocab hash, catalog,
// normalization stats, tensor directory) followed by raw little-endian
// float64 data in directory order. Writing is byte-deterministic.
//
// The vocabulary itself lives in a separate vocab file; loading verifies the
// stored hash against the vocabulary passed in.
std::string checkpoint_to_bytes(const Model& model);
Model checkpoint_from_bytes(const std::string& bytes, Vocab vocab);

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path, const Vocab& vocab);

}  // namespace medfuse
