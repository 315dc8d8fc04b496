#pragma once

// Model checkpoint: `<stem>.json` holds the model spec and an index of every
// parameter tensor (name, shape, float offset) in Model::parameters() order;
// `<stem>.bin` holds the raw little-endian float32 values back to back.

#include <filesystem>

#include "geoconv/model.hpp"

namespace geoconv {

/// Writes `<stem>.json` and `<stem>.bin`; `stem` may carry either extension.
void save_checkpoint(const Model& model, const std::filesystem::path& stem);

/// Throws FormatError when the blob disagrees with the index.
Model load_checkpoint(const std::filesystem::path& stem);

}  // namespace geoconv
