#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <exception>
#include <span>
#include <stdexcept>
#include <string_view>
#include <thread>
#include <vector>

#include "leakdet/compress.hpp"
#include "leakdet/record.hpp"

namespace leakdet {

inline constexpr int kDefaultCompressorLevel = 9;

// ---------------------------------------------------------------------------
// Destination distance. Every component is 0 for identical inputs.

/// Number of identical leading bits of two addresses.
inline int common_prefix_bits(Ipv4 a, Ipv4 b) { return std::countl_zero(a.value ^ b.value); }

inline double ip_distance(Ipv4 a, Ipv4 b) { return 1.0 - common_prefix_bits(a, b) / 32.0; }

inline double port_distance(std::uint32_t a, std::uint32_t b) { return a == b ? 0.0 : 1.0; }

/// Classic two-row Levenshtein distance over bytes.
template <class S>
std::size_t levenshtein(const S& a, const S& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 0; i < n; ++i) {
    cur[0] = i + 1;
    for (std::size_t j = 0; j < m; ++j) {
      cur[j + 1] = std::min({prev[j + 1] + 1, cur[j] + 1, prev[j] + (a[i] == b[j] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

inline double host_distance(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

inline double dest_distance(const HttpRecord& p, const HttpRecord& q) {
  return ip_distance(p.dst_ip, q.dst_ip) + port_distance(p.dst_port, q.dst_port) +
         host_distance(p.host, q.host);
}

// ---------------------------------------------------------------------------
// Content distance (normalized compression distance per component)

/// NCD from precomputed compressed sizes of x, y and xy.
inline double ncd_from_sizes(std::size_t cx, std::size_t cy, std::size_t cxy) {
  const double lo = static_cast<double>(std::min(cx, cy));
  const double hi = static_cast<double>(std::max(cx, cy));
  return std::clamp((static_cast<double>(cxy) - lo) / hi, 0.0, 1.0);
}

/// Normalized compression distance. Empty components: both empty gives 0,
/// exactly one empty gives 1. The concatenation is always compressed as x
/// followed by y.
inline double ncd(std::string_view x, std::string_view y, DeflateCompressor& compressor) {
  if (x.empty() && y.empty()) return 0.0;
  if (x.empty() || y.empty()) return 1.0;
  return ncd_from_sizes(compressor.compressed_size(x), compressor.compressed_size(y),
                        compressor.compressed_size({x, y}));
}

inline double ncd(std::string_view x, std::string_view y, int level = kDefaultCompressorLevel) {
  DeflateCompressor compressor(level);
  return ncd(x, y, compressor);
}

inline std::array<std::string_view, 3> content_fields(const HttpRecord& r) {
  return {r.request_line, r.cookie, r.body};
}

inline double content_distance(const HttpRecord& p, const HttpRecord& q, DeflateCompressor& compressor) {
  const auto pf = content_fields(p);
  const auto qf = content_fields(q);
  double d = 0.0;
  for (std::size_t k = 0; k < pf.size(); ++k) d += ncd(pf[k], qf[k], compressor);
  return d;
}

inline double content_distance(const HttpRecord& p, const HttpRecord& q, int level = kDefaultCompressorLevel) {
  DeflateCompressor compressor(level);
  return content_distance(p, q, compressor);
}

inline double packet_distance(const HttpRecord& p, const HttpRecord& q, DeflateCompressor& compressor) {
  return dest_distance(p, q) + content_distance(p, q, compressor);
}

inline double packet_distance(const HttpRecord& p, const HttpRecord& q, int level = kDefaultCompressorLevel) {
  DeflateCompressor compressor(level);
  return packet_distance(p, q, compressor);
}

// ---------------------------------------------------------------------------

/// Symmetric matrix with zero diagonal, one stored value per unordered pair.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), values_(n * (n > 0 ? n - 1 : 0) / 2, 0.0) {}

  std::size_t size() const { return n_; }

  double at(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    return values_[index(i, j)];
  }

  void set(std::size_t i, std::size_t j, double v) {
    if (i == j) throw std::invalid_argument("diagonal of a distance matrix is fixed at zero");
    values_[index(i, j)] = v;
  }

  /// Build from a full square matrix, reading the upper triangle.
  static DistanceMatrix from_square(const std::vector<std::vector<double>>& square) {
    DistanceMatrix m(square.size());
    for (std::size_t i = 0; i < square.size(); ++i) {
      for (std::size_t j = i + 1; j < square.size(); ++j) m.set(i, j, square[i][j]);
    }
    return m;
  }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    // Row-major upper triangle without the diagonal.
    return i * (2 * n_ - i - 1) / 2 + (j - i - 1);
  }

  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// packet_distance over every unordered pair. Rows are split across up to
/// `threads` workers, each writing only its own cells, so the result does
/// not depend on the thread count.
inline DistanceMatrix distance_matrix(std::span<const HttpRecord> records, int level = kDefaultCompressorLevel,
                                      unsigned threads = 1) {
  if (records.empty()) throw std::invalid_argument("distance_matrix needs at least one record");
  const std::size_t n = records.size();
  DistanceMatrix m(n);

  // C(x) for every component of every record, computed once.
  std::vector<std::array<std::size_t, 3>> sizes(n);
  {
    DeflateCompressor c(level);
    for (std::size_t i = 0; i < n; ++i) {
      auto f = content_fields(records[i]);
      for (std::size_t k = 0; k < 3; ++k) sizes[i][k] = f[k].empty() ? 0 : c.compressed_size(f[k]);
    }
  }

  auto work = [&](unsigned worker, unsigned stride) {
    DeflateCompressor c(level);
    for (std::size_t i = worker; i < n; i += stride) {
      const auto fi = content_fields(records[i]);
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto fj = content_fields(records[j]);
        double d = dest_distance(records[i], records[j]);
        for (std::size_t k = 0; k < 3; ++k) {
          if (fi[k].empty() && fj[k].empty()) continue;
          if (fi[k].empty() || fj[k].empty()) {
            d += 1.0;
            continue;
          }
          d += ncd_from_sizes(sizes[i][k], sizes[j][k], c.compressed_size({fi[k], fj[k]}));
        }
        m.set(i, j, d);
      }
    }
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          try {
            work(t, threads);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return m;
}

}  // namespace leakdet
