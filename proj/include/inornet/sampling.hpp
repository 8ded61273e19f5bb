#pragma once

#include "inornet/pointcloud.hpp"

#include <span>
#include <vector>

namespace inornet {

/// Greedy max-min sampling of `count` indices starting at `start_index`.
/// Distances are compared as squared Euclidean in double precision; ties go
/// to the smallest index. Throws std::out_of_range on bad count/start.
std::vector<std::uint32_t> farthest_point_sampling(const PointCloud& pc, std::size_t count,
                                                   std::size_t start_index = 0);

/// Indices of the `m` points closest to `center`, ordered by (distance, index).
std::vector<std::uint32_t> knn_query(const PointCloud& pc, const Vec3& center, std::size_t m);

/// Reference implementations over an interleaved xyz float buffer. These are
/// what the optional accelerated kernels must match index-for-index.
std::vector<std::uint32_t> fps_reference(std::span<const float> xyz, std::size_t count,
                                         std::size_t start_index);
std::vector<std::uint32_t> knn_reference(std::span<const float> xyz, const Vec3& center, std::size_t m);

}  // namespace inornet
