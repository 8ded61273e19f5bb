#include "inornet/sampling.hpp"

#include "inornet/geo_kernels.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace inornet {
namespace {

std::span<const float> flat_view(const PointCloud& pc) {
  static_assert(sizeof(Point3f) == 3 * sizeof(float));
  return {reinterpret_cast<const float*>(pc.points.data()), pc.size() * 3};
}

bool float_exact(const Vec3& c) {
  return static_cast<double>(static_cast<float>(c[0])) == c[0] &&
         static_cast<double>(static_cast<float>(c[1])) == c[1] &&
         static_cast<double>(static_cast<float>(c[2])) == c[2];
}

double sq_dist(std::span<const float> xyz, std::size_t i, const Vec3& c) {
  const double dx = static_cast<double>(xyz[3 * i]) - c[0];
  const double dy = static_cast<double>(xyz[3 * i + 1]) - c[1];
  const double dz = static_cast<double>(xyz[3 * i + 2]) - c[2];
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

std::vector<std::uint32_t> fps_reference(std::span<const float> xyz, std::size_t count,
                                         std::size_t start_index) {
  const std::size_t n = xyz.size() / 3;
  if (count < 1 || count > n) throw std::out_of_range("farthest_point_sampling: L out of range");
  if (start_index >= n) throw std::out_of_range("farthest_point_sampling: start index out of range");

  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  std::vector<std::uint32_t> out;
  out.reserve(count);
  std::size_t current = start_index;
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(static_cast<std::uint32_t>(current));
    taken[current] = 1;
    if (k + 1 == count) break;
    const Vec3 c{xyz[3 * current], xyz[3 * current + 1], xyz[3 * current + 2]};
    std::size_t best = n;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      min_d[i] = std::min(min_d[i], sq_dist(xyz, i, c));
      if (min_d[i] > best_d) {  // strict: keeps the smallest index on ties
        best_d = min_d[i];
        best = i;
      }
    }
    current = best;
  }
  return out;
}

std::vector<std::uint32_t> knn_reference(std::span<const float> xyz, const Vec3& center, std::size_t m) {
  const std::size_t n = xyz.size() / 3;
  if (m < 1 || m > n) throw std::out_of_range("knn_query: m out of range");
  std::vector<std::pair<double, std::uint32_t>> keyed(n);
  for (std::size_t i = 0; i < n; ++i) keyed[i] = {sq_dist(xyz, i, center), static_cast<std::uint32_t>(i)};
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(m), keyed.end());
  std::vector<std::uint32_t> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = keyed[i].second;
  return out;
}

std::vector<std::uint32_t> farthest_point_sampling(const PointCloud& pc, std::size_t count,
                                                   std::size_t start_index) {
  const auto& kernels = active_geo_kernels();
  if (!kernels.accelerated()) return fps_reference(flat_view(pc), count, start_index);
  if (count < 1 || count > pc.size()) throw std::out_of_range("farthest_point_sampling: L out of range");
  if (start_index >= pc.size()) throw std::out_of_range("farthest_point_sampling: start index out of range");
  std::vector<std::uint32_t> out(count);
  const auto rc = kernels.fps(flat_view(pc).data(), static_cast<std::uint32_t>(pc.size()),
                              static_cast<std::uint32_t>(count), static_cast<std::uint32_t>(start_index),
                              out.data());
  if (rc != INORNET_KERNEL_OK) return fps_reference(flat_view(pc), count, start_index);
  return out;
}

std::vector<std::uint32_t> knn_query(const PointCloud& pc, const Vec3& center, std::size_t m) {
  const auto& kernels = active_geo_kernels();
  // The kernel ABI takes float centers; virtual centroids stay on the reference path.
  if (!kernels.accelerated() || !float_exact(center)) return knn_reference(flat_view(pc), center, m);
  if (m < 1 || m > pc.size()) throw std::out_of_range("knn_query: m out of range");
  const float c[3] = {static_cast<float>(center[0]), static_cast<float>(center[1]),
                      static_cast<float>(center[2])};
  std::vector<std::uint32_t> out(m);
  const auto rc = kernels.knn(flat_view(pc).data(), static_cast<std::uint32_t>(pc.size()), c,
                              static_cast<std::uint32_t>(m), out.data());
  if (rc != INORNET_KERNEL_OK) return knn_reference(flat_view(pc), center, m);
  return out;
}

}  // namespace inornet
