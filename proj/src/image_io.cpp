#include "vibealign/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace vibealign {

void write_pgm(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError(IoError::Code::WriteFailed, "cannot open " + path.string() + " for writing");
  }
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(image.width));
  for (int i = 0; i < image.height; ++i) {
    for (int j = 0; j < image.width; ++j) {
      const float v = std::clamp(image.at(i, j), 0.0f, 1.0f);
      row[static_cast<size_t>(j)] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(row.data()), image.width);
  }
  if (!out) {
    throw IoError(IoError::Code::WriteFailed, "write failed for " + path.string());
  }
}

void write_raw_float_grid(const EnergyMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError(IoError::Code::WriteFailed, "cannot open " + path.string() + " for writing");
  }
  std::vector<float> values(map.values.size());
  std::transform(map.values.begin(), map.values.end(), values.begin(),
                 [](double v) { return static_cast<float>(v); });
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!out) {
    throw IoError(IoError::Code::WriteFailed, "write failed for " + path.string());
  }
}

}  // namespace vibealign
