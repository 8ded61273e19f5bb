#pragma once

#include "inornet/common.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace inornet {

struct Point3f {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;

  friend bool operator==(const Point3f&, const Point3f&) = default;
};

/// A labeled (or unlabeled, label == -1) set of 3D points.
struct PointCloud {
  std::vector<Point3f> points;
  int label = -1;
  std::string id;

  std::size_t size() const { return points.size(); }
};

// PCLD binary format: "PCLD", u32 LE count, count * 3 float32 LE.
PointCloud read_pointcloud_file(const std::filesystem::path& path);
void write_pointcloud_file(const std::filesystem::path& path, const PointCloud& pc);
PointCloud decode_pointcloud(const std::string& bytes);
std::string encode_pointcloud(const PointCloud& pc);

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

/// Parses an OFF mesh. Polygons with more than three vertices are fan-triangulated.
TriangleMesh read_off_mesh(std::istream& in);
TriangleMesh read_off_file(const std::filesystem::path& path);

/// Area-proportional surface sampling. Throws ValidationError on zero total area.
PointCloud sample_mesh_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed);

/// Centers at the origin and scales the farthest point to radius 1.
PointCloud normalize_unit_sphere(const PointCloud& pc);

struct AugmentOptions {
  bool rotate_z = true;
  double jitter_sigma = 0.01;
  double jitter_clip = 0.05;
};

PointCloud augment(const PointCloud& pc, std::uint64_t seed, const AugmentOptions& opts);

/// Rotation about +z by a fixed angle (radians).
PointCloud rotate_z(const PointCloud& pc, double angle);

/// Resamples to exactly `count` points, with replacement, deterministically.
/// Clouds that already have `count` points are returned unchanged.
PointCloud resample(const PointCloud& pc, std::size_t count, std::uint64_t seed);

bool all_finite(const PointCloud& pc);

}  // namespace inornet
