// Versioned binary container for a built dataset. Layout is documented in
// docs/file-formats.md; the header carries the vocabulary and the build seed
// so a rebuild with the same inputs is byte-identical.

#pragma once

#include <string>

#include "fwm/babi.hpp"

namespace fwm {

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace fwm
