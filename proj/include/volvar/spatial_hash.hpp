#pragma once

#include "volvar/types.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace volvar {

/// Uniform bucket grid anchored at the origin. Neighbour queries with radius
/// at most the bucket size visit the 3^n surrounding buckets in a fixed order,
/// and indices inside a bucket in insertion order.
class SpatialHash {
 public:
  /// `positions` holds `count` points of dimension n, stored contiguously.
  SpatialHash(std::span<const double> positions, int n, double bucket);

  double bucket() const { return bucket_; }

  template <class Fn>
  void for_each_candidate(const double* y, Fn&& fn) const {
    std::int64_t base[3] = {0, 0, 0};
    for (int i = 0; i < n_; ++i) base[i] = coord(y[i]);
    int offsets = 1;
    for (int i = 0; i < n_; ++i) offsets *= 3;
    for (int k = 0; k < offsets; ++k) {
      std::int64_t c[3] = {0, 0, 0};
      int rem = k;
      for (int i = 0; i < n_; ++i) {
        c[i] = base[i] + (rem % 3) - 1;
        rem /= 3;
      }
      auto it = buckets_.find(pack(c));
      if (it == buckets_.end()) continue;
      for (std::uint32_t idx : it->second) fn(idx);
    }
  }

 private:
  std::int64_t coord(double x) const { return static_cast<std::int64_t>(std::floor(x / bucket_)); }
  static std::int64_t pack(const std::int64_t* c) {
    constexpr std::int64_t kOffset = std::int64_t{1} << 20;
    constexpr std::int64_t kMask = (std::int64_t{1} << 21) - 1;
    return ((c[0] + kOffset) & kMask) | (((c[1] + kOffset) & kMask) << 21) |
           (((c[2] + kOffset) & kMask) << 42);
  }

  int n_;
  double bucket_;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> buckets_;
};

inline SpatialHash::SpatialHash(std::span<const double> positions, int n, double bucket)
    : n_(n), bucket_(bucket) {
  if (n < 1 || n > kMaxAmbient) throw DimensionMismatch("SpatialHash: need 1 <= n <= 3");
  if (!(bucket > 0.0)) throw InvalidArgument("SpatialHash: bucket must be positive");
  const std::size_t count = positions.size() / static_cast<std::size_t>(n);
  for (std::size_t j = 0; j < count; ++j) {
    std::int64_t c[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) {
      c[i] = coord(positions[j * n + i]);
      if (c[i] <= -(std::int64_t{1} << 20) || c[i] >= (std::int64_t{1} << 20)) {
        throw InvalidArgument("SpatialHash: coordinates too large for the bucket size");
      }
    }
    buckets_[pack(c)].push_back(static_cast<std::uint32_t>(j));
  }
}

}  // namespace volvar
