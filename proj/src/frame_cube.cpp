#include "vibealign/frame_cube.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vibealign {
namespace {

constexpr char kMagic[4] = {'V', 'I', 'B', 'E'};
constexpr size_t kHeaderBytes = 4 + 2 + 3 * 4 + 4;

static_assert(std::endian::native == std::endian::little,
              "frame cube serialization assumes a little-endian host");

template <typename T>
void put(std::string& buf, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <typename T>
T take(const char*& cursor) {
  T value;
  std::memcpy(&value, cursor, sizeof(T));
  cursor += sizeof(T);
  return value;
}

}  // namespace

void write_frame_cube(const FrameSequence& seq, const std::filesystem::path& path) {
  const int frames = seq.frame_count();
  if (seq.height < 1 || seq.width < 1 || frames < 2) {
    throw InputError("frame cube needs positive dimensions and at least 2 frames");
  }

  std::string header;
  header.append(kMagic, 4);
  put<std::uint16_t>(header, kFrameCubeVersion);
  put<std::uint32_t>(header, static_cast<std::uint32_t>(seq.height));
  put<std::uint32_t>(header, static_cast<std::uint32_t>(seq.width));
  put<std::uint32_t>(header, static_cast<std::uint32_t>(frames));
  put<float>(header, static_cast<float>(seq.frame_rate));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError(IoError::Code::WriteFailed, "cannot open " + path.string() + " for writing");
  }
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(seq.data.data()),
            static_cast<std::streamsize>(seq.data.size() * sizeof(float)));
  if (!out) {
    throw IoError(IoError::Code::WriteFailed, "write failed for " + path.string());
  }
}

FrameSequence read_frame_cube(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(IoError::Code::OpenFailed, "cannot open " + path.string());
  }

  char header[kHeaderBytes];
  in.read(header, kHeaderBytes);
  if (in.gcount() != static_cast<std::streamsize>(kHeaderBytes)) {
    throw IoError(IoError::Code::Truncated, "file shorter than the frame cube header");
  }
  if (std::memcmp(header, kMagic, 4) != 0) {
    throw IoError(IoError::Code::BadMagic, "bad magic bytes, not a frame cube file");
  }

  const char* cursor = header + 4;
  const auto version = take<std::uint16_t>(cursor);
  if (version != kFrameCubeVersion) {
    std::ostringstream msg;
    msg << "unsupported frame cube version " << version << " (expected " << kFrameCubeVersion
        << ")";
    throw IoError(IoError::Code::VersionMismatch, msg.str());
  }
  const auto height = take<std::uint32_t>(cursor);
  const auto width = take<std::uint32_t>(cursor);
  const auto frames = take<std::uint32_t>(cursor);
  const auto frame_rate = take<float>(cursor);
  if (height == 0 || width == 0 || frames < 2 || !(frame_rate > 0.0f)) {
    std::ostringstream msg;
    msg << "degenerate header: " << height << "x" << width << "x" << frames << " @ "
        << frame_rate << " Hz";
    throw IoError(IoError::Code::BadHeader, msg.str());
  }

  const std::uint64_t count =
      static_cast<std::uint64_t>(height) * width * frames;
  FrameSequence seq;
  seq.height = static_cast<int>(height);
  seq.width = static_cast<int>(width);
  seq.frame_rate = frame_rate;
  seq.data.resize(count);
  in.read(reinterpret_cast<char*>(seq.data.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  const auto got = static_cast<std::uint64_t>(in.gcount());
  if (got != count * sizeof(float)) {
    std::ostringstream msg;
    msg << "truncated payload: expected " << count * sizeof(float) << " bytes, found " << got;
    throw IoError(IoError::Code::Truncated, msg.str());
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw IoError(IoError::Code::BadHeader, "payload longer than the header declares");
  }
  return seq;
}

}  // namespace vibealign
