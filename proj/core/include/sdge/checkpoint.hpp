#pragma once

#include <string>

#include "sdge/model.hpp"

namespace sdge {

/// JSON checkpoint: a version field plus one record per named tensor with its
/// shape and row-major payload.
void save_checkpoint(const ModelState& model, const std::string& path);

/// Load tensor values into an existing, identically-shaped model.
void load_checkpoint(ModelState& model, const std::string& path);

}  // namespace sdge
