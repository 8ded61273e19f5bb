#include "inornet/pointcloud.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace inornet {
namespace {

constexpr char kMagic[4] = {'P', 'C', 'L', 'D'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string encode_pointcloud(const PointCloud& pc) {
  std::string out(kMagic, 4);
  out.reserve(8 + pc.size() * 12);
  put_u32(out, static_cast<std::uint32_t>(pc.size()));
  for (const auto& p : pc.points) {
    put_u32(out, std::bit_cast<std::uint32_t>(p.x));
    put_u32(out, std::bit_cast<std::uint32_t>(p.y));
    put_u32(out, std::bit_cast<std::uint32_t>(p.z));
  }
  return out;
}

PointCloud decode_pointcloud(const std::string& bytes) {
  if (bytes.size() < 8 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw FormatError("PCLD: bad magic");
  }
  const std::uint64_t count = get_u32(bytes, 4);
  const std::uint64_t expected = 8 + count * 12;
  if (bytes.size() < expected) {
    throw FormatError("PCLD: truncated payload (header says " + std::to_string(count) +
                      " points, have " + std::to_string((bytes.size() - 8) / 4) + " floats)");
  }
  if (bytes.size() > expected) throw FormatError("PCLD: trailing bytes after payload");
  PointCloud pc;
  pc.points.resize(count);
  std::size_t off = 8;
  for (auto& p : pc.points) {
    p.x = std::bit_cast<float>(get_u32(bytes, off));
    p.y = std::bit_cast<float>(get_u32(bytes, off + 4));
    p.z = std::bit_cast<float>(get_u32(bytes, off + 8));
    off += 12;
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw FormatError("PCLD: non-finite coordinate");
    }
  }
  return pc;
}

PointCloud read_pointcloud_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open point cloud file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_pointcloud(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_pointcloud_file(const std::filesystem::path& path, const PointCloud& pc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write point cloud file: " + path.string());
  const std::string bytes = encode_pointcloud(pc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TriangleMesh read_off_mesh(std::istream& in) {
  // Comments start with '#'; tokens may span lines freely.
  std::string text, line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    text += line;
    text += '\n';
  }
  std::istringstream ss(text);
  std::string header;
  ss >> header;
  std::size_t nv = 0, nf = 0, ne = 0;
  if (header == "OFF") {
    ss >> nv >> nf >> ne;
  } else if (header.rfind("OFF", 0) == 0) {
    // Some ModelNet files glue the counts onto the header: "OFF490 518 0".
    std::istringstream hs(header.substr(3));
    hs >> nv;
    ss >> nf >> ne;
  } else {
    throw ParseError("OFF: missing header");
  }
  if (!ss) throw ParseError("OFF: bad counts line");
  TriangleMesh mesh;
  mesh.vertices.resize(nv);
  for (auto& v : mesh.vertices) {
    ss >> v[0] >> v[1] >> v[2];
    if (!ss) throw ParseError("OFF: truncated vertex list");
  }
  for (std::size_t f = 0; f < nf; ++f) {
    std::size_t k = 0;
    ss >> k;
    std::vector<std::uint32_t> idx(k);
    for (auto& i : idx) ss >> i;
    if (!ss) throw ParseError("OFF: truncated face list");
    for (auto i : idx) {
      if (i >= nv) throw ParseError("OFF: face references vertex " + std::to_string(i));
    }
    for (std::size_t t = 1; t + 1 < k; ++t) mesh.triangles.push_back({idx[0], idx[t], idx[t + 1]});
  }
  return mesh;
}

TriangleMesh read_off_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open OFF file: " + path.string());
  return read_off_mesh(in);
}

namespace {

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 u{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const Vec3 v{c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  const double cx = u[1] * v[2] - u[2] * v[1];
  const double cy = u[2] * v[0] - u[0] * v[2];
  const double cz = u[0] * v[1] - u[1] * v[0];
  return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
}

}  // namespace

PointCloud sample_mesh_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed) {
  std::vector<double> cumulative;
  cumulative.reserve(mesh.triangles.size());
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    total += triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw ValidationError("degenerate mesh: zero total surface area");

  Rng rng(seed);
  PointCloud pc;
  pc.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double pick = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& t = mesh.triangles[static_cast<std::size_t>(it - cumulative.begin())];
    double r1 = rng.uniform();
    double r2 = rng.uniform();
    if (r1 + r2 > 1.0) {
      r1 = 1.0 - r1;
      r2 = 1.0 - r2;
    }
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    Point3f p;
    p.x = static_cast<float>(a[0] + r1 * (b[0] - a[0]) + r2 * (c[0] - a[0]));
    p.y = static_cast<float>(a[1] + r1 * (b[1] - a[1]) + r2 * (c[1] - a[1]));
    p.z = static_cast<float>(a[2] + r1 * (b[2] - a[2]) + r2 * (c[2] - a[2]));
    pc.points.push_back(p);
  }
  return pc;
}

PointCloud normalize_unit_sphere(const PointCloud& pc) {
  PointCloud out = pc;
  if (pc.points.empty()) return out;
  double cx = 0, cy = 0, cz = 0;
  for (const auto& p : pc.points) {
    cx += p.x;
    cy += p.y;
    cz += p.z;
  }
  const double n = static_cast<double>(pc.size());
  cx /= n;
  cy /= n;
  cz /= n;
  double max_r = 0.0;
  for (const auto& p : pc.points) {
    const double dx = p.x - cx, dy = p.y - cy, dz = p.z - cz;
    max_r = std::max(max_r, std::sqrt(dx * dx + dy * dy + dz * dz));
  }
  // Points are stored as float32; shrinking by a few ulps keeps every
  // rounded radius at or below 1.
  constexpr double kFloatGuard = 1.0 - 4e-7;
  const double scale = max_r > 0.0 ? kFloatGuard / max_r : 0.0;
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const auto& p = pc.points[i];
    out.points[i] = {static_cast<float>((p.x - cx) * scale), static_cast<float>((p.y - cy) * scale),
                     static_cast<float>((p.z - cz) * scale)};
  }
  return out;
}

PointCloud rotate_z(const PointCloud& pc, double angle) {
  PointCloud out = pc;
  const double c = std::cos(angle), s = std::sin(angle);
  for (auto& p : out.points) {
    const double x = p.x, y = p.y;
    p.x = static_cast<float>(c * x - s * y);
    p.y = static_cast<float>(s * x + c * y);
  }
  return out;
}

PointCloud augment(const PointCloud& pc, std::uint64_t seed, const AugmentOptions& opts) {
  if (opts.jitter_clip < 0.0) throw std::invalid_argument("augment: jitter_clip must be >= 0");
  Rng rng(seed);
  PointCloud out = pc;
  if (opts.rotate_z) out = rotate_z(out, rng.uniform() * 2.0 * std::numbers::pi);
  if (opts.jitter_sigma > 0.0) {
    auto jit = [&] { return std::clamp(opts.jitter_sigma * rng.normal(), -opts.jitter_clip, opts.jitter_clip); };
    auto shift = [&](float& coord) {
      const double original = coord;
      float moved = static_cast<float>(original + jit());
      // Float rounding must not push the displacement past the clip bound.
      while (std::abs(static_cast<double>(moved) - original) > opts.jitter_clip) {
        moved = std::nextafter(moved, coord);
      }
      coord = moved;
    };
    for (auto& p : out.points) {
      shift(p.x);
      shift(p.y);
      shift(p.z);
    }
  }
  return out;
}

PointCloud resample(const PointCloud& pc, std::size_t count, std::uint64_t seed) {
  if (pc.size() == count) return pc;
  if (pc.points.empty()) throw ValidationError("cannot resample an empty point cloud: " + pc.id);
  Rng rng(seed);
  PointCloud out;
  out.label = pc.label;
  out.id = pc.id;
  out.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.points.push_back(pc.points[rng.below(pc.size())]);
  return out;
}

bool all_finite(const PointCloud& pc) {
  return std::all_of(pc.points.begin(), pc.points.end(), [](const Point3f& p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
  });
}

}  // namespace inornet
