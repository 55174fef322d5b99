#pragma once

#include <array>
#include <string>

#include "error.hpp"
#include "matrix.hpp"

namespace lnadapt {

// The four acoustic target streams, each with its own output head.
enum class Stream : int { mcep = 0, lf0 = 1, bap = 2, uv = 3 };

inline constexpr int kNumStreams = 4;
inline constexpr std::array<Stream, kNumStreams> kAllStreams = {
    Stream::mcep, Stream::lf0, Stream::bap, Stream::uv};

using StreamSeqs = std::array<Sequence, kNumStreams>;
using StreamDims = std::array<std::size_t, kNumStreams>;

inline const std::string& stream_name(Stream s) {
  static const std::array<std::string, kNumStreams> names = {"mcep", "lf0", "bap", "uv"};
  return names[static_cast<int>(s)];
}

inline Stream stream_from_name(const std::string& name) {
  for (Stream s : kAllStreams) {
    if (stream_name(s) == name) return s;
  }
  throw ConfigError("unknown stream name: " + name);
}

inline int sidx(Stream s) { return static_cast<int>(s); }

}  // namespace lnadapt
