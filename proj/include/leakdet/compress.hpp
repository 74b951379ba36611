#pragma once

#include <zlib.h>

#include <array>
#include <initializer_list>
#include <string>
#include <string_view>

#include "leakdet/error.hpp"

namespace leakdet {

/// zlib DEFLATE compressor that reports compressed sizes.
///
/// The stream is allocated once and reset between calls. Not thread-safe;
/// use one instance per worker.
class DeflateCompressor {
 public:
  explicit DeflateCompressor(int level = Z_BEST_COMPRESSION) : level_(level) {
    if (level < 0 || level > 9) throw InternalError("compressor level must be in [0, 9]");
    if (deflateInit(&stream_, level) != Z_OK) throw InternalError("deflateInit failed");
  }
  ~DeflateCompressor() { deflateEnd(&stream_); }

  DeflateCompressor(const DeflateCompressor&) = delete;
  DeflateCompressor& operator=(const DeflateCompressor&) = delete;

  int level() const { return level_; }

  /// Size in bytes of the zlib stream for the concatenation of `parts`.
  std::size_t compressed_size(std::initializer_list<std::string_view> parts) {
    if (deflateReset(&stream_) != Z_OK) throw InternalError("deflateReset failed");
    std::size_t total = 0;
    auto drain = [&](int flush) {
      int rc;
      do {
        stream_.next_out = out_.data();
        stream_.avail_out = static_cast<uInt>(out_.size());
        rc = deflate(&stream_, flush);
        if (rc == Z_STREAM_ERROR) throw InternalError("deflate failed");
        total += out_.size() - stream_.avail_out;
      } while (stream_.avail_out == 0 || (flush == Z_FINISH && rc != Z_STREAM_END));
    };
    for (auto part : parts) {
      stream_.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(part.data()));
      stream_.avail_in = static_cast<uInt>(part.size());
      drain(Z_NO_FLUSH);
    }
    stream_.next_in = nullptr;
    stream_.avail_in = 0;
    drain(Z_FINISH);
    return total;
  }

  std::size_t compressed_size(std::string_view s) { return compressed_size({s}); }

 private:
  int level_;
  z_stream stream_{};
  std::array<Bytef, 16384> out_{};
};

}  // namespace leakdet
