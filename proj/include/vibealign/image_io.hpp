#pragma once

#include <filesystem>

#include "vibealign/spectral.hpp"
#include "vibealign/types.hpp"

namespace vibealign {

/// Binary 8-bit portable greymap (P5). Values clamped to [0,1] then scaled.
void write_pgm(const Image& image, const std::filesystem::path& path);

/// Raw row-major f32 grid, no header (dimensions travel in the run summary).
void write_raw_float_grid(const EnergyMap& map, const std::filesystem::path& path);

}  // namespace vibealign
