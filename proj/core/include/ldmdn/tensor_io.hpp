#pragma once

#include <filesystem>
#include <iosfwd>

#include "ldmdn/tensor.hpp"

namespace ldmdn {

// Raw tensor dump: uint32 rank, rank x uint64 extents, then numel float32
// values. Everything little-endian.

void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace ldmdn
