#pragma once

#include <filesystem>
#include <memory>

#include "ldmdn/network.hpp"

namespace ldmdn {

/// Writes `manifest.txt` (variant tag, geometry, widths, parameter names and
/// shapes) plus one `<name>.f32` tensor dump per parameter.
void save_checkpoint(const DisentangleNet& net, const std::filesystem::path& dir);

/// Rebuilds the network described by the manifest and loads its parameters.
std::unique_ptr<DisentangleNet> load_checkpoint(const std::filesystem::path& dir);

}  // namespace ldmdn
