#pragma once

#include <filesystem>

#include "vibealign/types.hpp"

namespace vibealign {

// On-disk frame cube, little-endian:
//   "VIBE"  magic, 4 bytes
//   u16     format version (currently 1)
//   u32     height, u32 width, u32 frames
//   f32     frame rate [Hz]
//   f32[frames * height * width] row-major intensities
// Write -> read reproduces every value bit-exactly.

inline constexpr std::uint16_t kFrameCubeVersion = 1;

void write_frame_cube(const FrameSequence& seq, const std::filesystem::path& path);
FrameSequence read_frame_cube(const std::filesystem::path& path);

}  // namespace vibealign
