#include "inornet/geo_kernels.hpp"

#include "inornet/sampling.hpp"

#include <dlfcn.h>

#include <cmath>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace {

bool finite_buffer(const float* xyz, std::uint32_t n) {
  for (std::size_t i = 0; i < 3ull * n; ++i) {
    if (!std::isfinite(xyz[i])) return false;
  }
  return true;
}

}  // namespace

extern "C" std::int32_t inornet_fps_reference(const float* xyz, std::uint32_t n, std::uint32_t count,
                                              std::uint32_t start_index, std::uint32_t* out) {
  if (xyz == nullptr || out == nullptr) return INORNET_KERNEL_NULL_POINTER;
  if (count < 1 || count > n || start_index >= n) return INORNET_KERNEL_OUT_OF_RANGE;
  if (!finite_buffer(xyz, n)) return INORNET_KERNEL_NON_FINITE;
  const auto idx = inornet::fps_reference(std::span<const float>(xyz, 3ull * n), count, start_index);
  std::copy(idx.begin(), idx.end(), out);
  return INORNET_KERNEL_OK;
}

extern "C" std::int32_t inornet_knn_reference(const float* xyz, std::uint32_t n, const float* center,
                                              std::uint32_t m, std::uint32_t* out) {
  if (xyz == nullptr || center == nullptr || out == nullptr) return INORNET_KERNEL_NULL_POINTER;
  if (m < 1 || m > n) return INORNET_KERNEL_OUT_OF_RANGE;
  if (!finite_buffer(xyz, n) || !finite_buffer(center, 1)) return INORNET_KERNEL_NON_FINITE;
  const inornet::Vec3 c{center[0], center[1], center[2]};
  const auto idx = inornet::knn_reference(std::span<const float>(xyz, 3ull * n), c, m);
  std::copy(idx.begin(), idx.end(), out);
  return INORNET_KERNEL_OK;
}

namespace inornet {
namespace {

GeoKernelTable reference_table() { return {&inornet_fps_reference, &inornet_knn_reference, "reference"}; }

std::mutex& table_mutex() {
  static std::mutex m;
  return m;
}

GeoKernelTable& table_storage() {
  static GeoKernelTable table = reference_table();
  return table;
}

// A few awkward cases: duplicates, exact ties, collinear points.
bool probe_matches_reference(const GeoKernelTable& t) {
  const std::vector<float> cloud = {0, 0, 0, 1, 0, 0, 10, 0, 0, 1, 0, 0, -10, 0, 0,
                                    0, 2, 0, 0, -2, 0, 3, 3, 3, 0.5f, 0.25f, -1};
  const auto n = static_cast<std::uint32_t>(cloud.size() / 3);
  for (std::uint32_t count = 1; count <= n; ++count) {
    for (std::uint32_t start = 0; start < n; start += 3) {
      std::vector<std::uint32_t> got(count), want(count);
      if (t.fps(cloud.data(), n, count, start, got.data()) != INORNET_KERNEL_OK) return false;
      inornet_fps_reference(cloud.data(), n, count, start, want.data());
      if (got != want) return false;
    }
  }
  const float centers[3][3] = {{0, 0, 0}, {0.5f, 0, 0}, {1, 1, 1}};
  for (const auto& c : centers) {
    for (std::uint32_t m = 1; m <= n; ++m) {
      std::vector<std::uint32_t> got(m), want(m);
      if (t.knn(cloud.data(), n, c, m, got.data()) != INORNET_KERNEL_OK) return false;
      inornet_knn_reference(cloud.data(), n, c, m, want.data());
      if (got != want) return false;
    }
  }
  std::uint32_t scratch = 0;
  return t.fps(cloud.data(), n, 0, 0, &scratch) != INORNET_KERNEL_OK &&
         t.knn(cloud.data(), n, centers[0], n + 1, &scratch) != INORNET_KERNEL_OK;
}

}  // namespace

const GeoKernelTable& active_geo_kernels() {
  std::lock_guard lock(table_mutex());
  return table_storage();
}

bool install_geo_kernels(const GeoKernelTable& table) {
  if (table.fps == nullptr || table.knn == nullptr) return false;
  if (!probe_matches_reference(table)) return false;
  std::lock_guard lock(table_mutex());
  table_storage() = table;
  if (table_storage().origin.empty() || table_storage().origin == "reference") {
    table_storage().origin = "installed";
  }
  return true;
}

bool load_geo_kernels(const std::string& library_path) {
  void* handle = dlopen(library_path.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (handle == nullptr) return false;
  GeoKernelTable table;
  table.fps = reinterpret_cast<inornet_fps_fn>(dlsym(handle, "inornet_geo_fps"));
  table.knn = reinterpret_cast<inornet_knn_fn>(dlsym(handle, "inornet_geo_knn"));
  table.origin = library_path;
  if (!install_geo_kernels(table)) {
    dlclose(handle);
    return false;
  }
  // The handle stays open for the lifetime of the process.
  return true;
}

void reset_geo_kernels() {
  std::lock_guard lock(table_mutex());
  table_storage() = reference_table();
}

}  // namespace inornet
