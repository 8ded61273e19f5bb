#pragma once

// Foreign interface for optional accelerated FPS / kNN kernels.
//
// A kernel library exports the two symbols below with C linkage. Buffers are
// owned by the caller: `xyz` holds 3*n interleaved little-endian float32
// values and `out` has room for `count` (resp. `m`) uint32 indices.

#include <cstdint>
#include <string>

extern "C" {

enum InornetKernelStatus : std::int32_t {
  INORNET_KERNEL_OK = 0,
  INORNET_KERNEL_OUT_OF_RANGE = 1,
  INORNET_KERNEL_NON_FINITE = 2,
  INORNET_KERNEL_NULL_POINTER = 3,
};

typedef std::int32_t (*inornet_fps_fn)(const float* xyz, std::uint32_t n, std::uint32_t count,
                                       std::uint32_t start_index, std::uint32_t* out);
typedef std::int32_t (*inornet_knn_fn)(const float* xyz, std::uint32_t n, const float* center,
                                       std::uint32_t m, std::uint32_t* out);

/// Reference kernels with the same ABI, exported so external implementations
/// can be differentially tested against them.
std::int32_t inornet_fps_reference(const float* xyz, std::uint32_t n, std::uint32_t count,
                                   std::uint32_t start_index, std::uint32_t* out);
std::int32_t inornet_knn_reference(const float* xyz, std::uint32_t n, const float* center,
                                   std::uint32_t m, std::uint32_t* out);
}

namespace inornet {

struct GeoKernelTable {
  inornet_fps_fn fps = nullptr;
  inornet_knn_fn knn = nullptr;
  std::string origin;  // "reference" or the loaded library path

  bool accelerated() const { return origin != "reference"; }
};

/// The table used by farthest_point_sampling / knn_query.
const GeoKernelTable& active_geo_kernels();

/// Installs a kernel table after probing it against the reference on a small
/// fixed instance. Returns false (and keeps the current table) if the probe
/// disagrees or a symbol is missing.
bool install_geo_kernels(const GeoKernelTable& table);

/// dlopen()s `library_path` and installs `inornet_geo_fps` / `inornet_geo_knn`
/// from it. Falls back to the reference silently on any failure.
bool load_geo_kernels(const std::string& library_path);

/// Reverts to the reference kernels.
void reset_geo_kernels();

}  // namespace inornet
