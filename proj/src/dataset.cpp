#include "inornet/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>

namespace inornet {

using nlohmann::json;

std::string to_string(Split s) { return s == Split::Train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw ParseError("unknown split tag: " + s);
}

json ShapeRecipe::to_json() const {
  return {{"shape", shape}, {"seed", seed}, {"points", points}, {"noise", noise_sigma}, {"deform", deform}};
}

ShapeRecipe ShapeRecipe::from_json(const json& j) {
  ShapeRecipe r;
  r.shape = j.at("shape").get<std::string>();
  r.seed = j.value("seed", std::uint64_t{0});
  r.points = j.value("points", std::size_t{1024});
  r.noise_sigma = j.value("noise", 0.0);
  r.deform = j.value("deform", 0.0);
  return r;
}

json DatasetManifest::to_json() const {
  json samples_json = json::array();
  for (const auto& s : samples) {
    json e = {{"id", s.id}, {"class", s.class_index}, {"split", inornet::to_string(s.split)}};
    if (s.file) e["file"] = std::filesystem::relative(*s.file, base_dir).generic_string();
    if (s.recipe) e["recipe"] = s.recipe->to_json();
    samples_json.push_back(std::move(e));
  }
  return {{"classes", classes}, {"samples", samples_json}};
}

DatasetManifest parse_manifest(const json& j, const std::filesystem::path& base_dir) {
  DatasetManifest m;
  m.base_dir = base_dir;
  try {
    m.classes = j.at("classes").get<std::vector<std::string>>();
    for (const auto& e : j.at("samples")) {
      ManifestSample s;
      s.id = e.at("id").get<std::string>();
      s.class_index = e.at("class").get<int>();
      s.split = split_from_string(e.at("split").get<std::string>());
      if (e.contains("file")) s.file = base_dir / e.at("file").get<std::string>();
      if (e.contains("recipe")) s.recipe = ShapeRecipe::from_json(e.at("recipe"));
      if (!s.file && !s.recipe) throw ParseError("sample " + s.id + " has neither file nor recipe");
      m.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
  validate_manifest(m);
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed manifest " + path.string() + ": " + e.what());
  }
  return parse_manifest(j, path.parent_path());
}

void validate_manifest(const DatasetManifest& m) {
  std::set<std::string> ids;
  std::set<int> used;
  for (const auto& s : m.samples) {
    if (!ids.insert(s.id).second) throw ValidationError("duplicate sample id: " + s.id);
    if (s.class_index < 0 || static_cast<std::size_t>(s.class_index) >= m.classes.size()) {
      throw ValidationError("sparse class indices: sample " + s.id + " has class " +
                            std::to_string(s.class_index) + " but only " + std::to_string(m.classes.size()) +
                            " classes are declared");
    }
    used.insert(s.class_index);
    if (s.file && !std::filesystem::exists(*s.file)) {
      throw ValidationError("missing file: " + s.file->string());
    }
    if (s.recipe) {
      const auto& kinds = synthetic_shape_kinds();
      if (std::find(kinds.begin(), kinds.end(), s.recipe->shape) == kinds.end()) {
        throw ValidationError("unresolvable recipe: unknown shape kind " + s.recipe->shape);
      }
    }
  }
  if (used.size() != m.classes.size()) {
    throw ValidationError("sparse class indices: " + std::to_string(used.size()) + " of " +
                          std::to_string(m.classes.size()) + " classes have samples");
  }
}

PointCloud load_sample(const DatasetManifest&, const ManifestSample& sample, std::size_t points) {
  PointCloud pc = sample.file ? read_pointcloud_file(*sample.file) : generate_shape(*sample.recipe);
  pc.id = sample.id;
  pc.label = sample.class_index;
  pc = resample(pc, points, fnv1a64(sample.id));
  if (!all_finite(pc)) throw FormatError("non-finite coordinate in sample " + sample.id);
  return normalize_unit_sphere(pc);
}

std::size_t IncrementalSchedule::old_class_count(std::size_t s) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < s && i < state_classes.size(); ++i) n += state_classes[i].size();
  return n;
}

std::vector<int> IncrementalSchedule::classes_seen_through(std::size_t s) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < s && i < state_classes.size(); ++i) {
    out.insert(out.end(), state_classes[i].begin(), state_classes[i].end());
  }
  return out;
}

IncrementalSchedule IncrementalSchedule::even(std::size_t classes, std::size_t states) {
  if (states == 0 || states > classes) throw ValidationError("schedule: need 1 <= states <= classes");
  IncrementalSchedule sched;
  std::size_t next = 0;
  for (std::size_t s = 0; s < states; ++s) {
    const std::size_t size = classes / states + (s < classes % states ? 1 : 0);
    std::vector<int> group;
    for (std::size_t i = 0; i < size; ++i) group.push_back(static_cast<int>(next++));
    sched.state_classes.push_back(std::move(group));
  }
  return sched;
}

IncrementalSchedule IncrementalSchedule::from_json(const json& j, std::size_t classes) {
  IncrementalSchedule sched;
  if (j.is_object()) {
    sched = even(classes, j.at("states").get<std::size_t>());
  } else if (j.is_array()) {
    sched.state_classes = j.get<std::vector<std::vector<int>>>();
  } else {
    throw ParseError("schedule must be an array of class groups or {\"states\": S}");
  }
  validate_schedule(sched, classes);
  return sched;
}

json IncrementalSchedule::to_json() const { return state_classes; }

void validate_schedule(const IncrementalSchedule& schedule, std::size_t classes) {
  std::set<int> seen;
  for (const auto& group : schedule.state_classes) {
    if (group.empty()) throw ValidationError("schedule: empty state group");
    for (int c : group) {
      if (c < 0 || static_cast<std::size_t>(c) >= classes) {
        throw ValidationError("schedule: class " + std::to_string(c) + " out of range");
      }
      if (!seen.insert(c).second) throw ValidationError("schedule: class " + std::to_string(c) + " repeated");
    }
  }
  if (seen.size() != classes) throw ValidationError("schedule does not cover every class");
}

// ---------------------------------------------------------------------------
// Procedural shapes

const std::vector<std::string>& synthetic_shape_kinds() {
  static const std::vector<std::string> kinds = {"sphere", "cube",  "cylinder", "cone",
                                                 "torus",  "table", "chair",    "capsule"};
  return kinds;
}

namespace {

constexpr double kPi = std::numbers::pi;

struct SurfacePart {
  double area;
  std::function<Vec3(Rng&)> sample;
};

Vec3 on_unit_sphere(Rng& rng) {
  for (;;) {
    const double x = rng.normal(), y = rng.normal(), z = rng.normal();
    const double n = std::sqrt(x * x + y * y + z * z);
    if (n > 1e-12) return {x / n, y / n, z / n};
  }
}

SurfacePart rect_z(double x0, double x1, double y0, double y1, double z) {
  return {(x1 - x0) * (y1 - y0), [=](Rng& r) { return Vec3{r.uniform(x0, x1), r.uniform(y0, y1), z}; }};
}

SurfacePart rect_y(double x0, double x1, double z0, double z1, double y) {
  return {(x1 - x0) * (z1 - z0), [=](Rng& r) { return Vec3{r.uniform(x0, x1), y, r.uniform(z0, z1)}; }};
}

SurfacePart tube(double cx, double cy, double radius, double z0, double z1) {
  return {2 * kPi * radius * (z1 - z0), [=](Rng& r) {
            const double a = r.uniform(0, 2 * kPi);
            return Vec3{cx + radius * std::cos(a), cy + radius * std::sin(a), r.uniform(z0, z1)};
          }};
}

SurfacePart disk(double radius, double z) {
  return {kPi * radius * radius, [=](Rng& r) {
            const double rr = radius * std::sqrt(r.uniform());
            const double a = r.uniform(0, 2 * kPi);
            return Vec3{rr * std::cos(a), rr * std::sin(a), z};
          }};
}

SurfacePart hemisphere(double radius, double z_center, double sign) {
  return {2 * kPi * radius * radius, [=](Rng& r) {
            Vec3 d = on_unit_sphere(r);
            d[2] = sign * std::abs(d[2]);
            return Vec3{radius * d[0], radius * d[1], z_center + radius * d[2]};
          }};
}

std::vector<SurfacePart> shape_parts(const std::string& shape) {
  if (shape == "sphere") {
    return {{4 * kPi, [](Rng& r) { return on_unit_sphere(r); }}};
  }
  if (shape == "cube") {
    return {rect_z(-1, 1, -1, 1, -1), rect_z(-1, 1, -1, 1, 1), rect_y(-1, 1, -1, 1, -1), rect_y(-1, 1, -1, 1, 1),
            {4.0, [](Rng& r) { return Vec3{-1, r.uniform(-1, 1), r.uniform(-1, 1)}; }},
            {4.0, [](Rng& r) { return Vec3{1, r.uniform(-1, 1), r.uniform(-1, 1)}; }}};
  }
  if (shape == "cylinder") return {tube(0, 0, 0.5, -1, 1), disk(0.5, -1), disk(0.5, 1)};
  if (shape == "cone") {
    // Lateral surface from apex (z=1) to base circle (radius 1, z=-1).
    const double slant = std::sqrt(5.0);
    return {{kPi * slant, [](Rng& r) {
               const double t = std::sqrt(r.uniform());
               const double a = r.uniform(0, 2 * kPi);
               return Vec3{t * std::cos(a), t * std::sin(a), 1.0 - 2.0 * t};
             }},
            disk(1.0, -1)};
  }
  if (shape == "torus") {
    constexpr double R = 1.0, rr = 0.35;
    return {{4 * kPi * kPi * R * rr, [](Rng& r) {
               for (;;) {
                 const double u = r.uniform(0, 2 * kPi);
                 const double v = r.uniform(0, 2 * kPi);
                 if (r.uniform() * (R + rr) <= R + rr * std::cos(v)) {
                   return Vec3{(R + rr * std::cos(v)) * std::cos(u), (R + rr * std::cos(v)) * std::sin(u),
                               rr * std::sin(v)};
                 }
               }
             }}};
  }
  if (shape == "table") {
    return {rect_z(-1, 1, -0.6, 0.6, 0.5), tube(0.85, 0.45, 0.06, -0.8, 0.5), tube(-0.85, 0.45, 0.06, -0.8, 0.5),
            tube(0.85, -0.45, 0.06, -0.8, 0.5), tube(-0.85, -0.45, 0.06, -0.8, 0.5)};
  }
  if (shape == "chair") {
    return {rect_z(-0.5, 0.5, -0.5, 0.5, 0.0),     rect_y(-0.5, 0.5, 0.0, 1.2, 0.5),
            tube(0.45, 0.45, 0.04, -0.8, 0.0),     tube(-0.45, 0.45, 0.04, -0.8, 0.0),
            tube(0.45, -0.45, 0.04, -0.8, 0.0),    tube(-0.45, -0.45, 0.04, -0.8, 0.0)};
  }
  if (shape == "capsule") return {tube(0, 0, 0.4, -0.6, 0.6), hemisphere(0.4, 0.6, 1.0), hemisphere(0.4, -0.6, -1.0)};
  throw ValidationError("unknown shape kind: " + shape);
}

}  // namespace

PointCloud generate_shape(const ShapeRecipe& recipe) {
  const auto parts = shape_parts(recipe.shape);
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& p : parts) cumulative.push_back(total += p.area);

  Rng rng(recipe.seed);
  Vec3 stretch{1.0, 1.0, 1.0};
  if (recipe.deform > 0.0) {
    for (auto& s : stretch) s = 1.0 + rng.uniform(-recipe.deform, recipe.deform);
  }
  // Centrally symmetric shapes are sampled in antipodal pairs so the sample
  // centroid sits exactly at the shape center.
  const bool mirrored = recipe.shape != "cone" && recipe.shape != "table" && recipe.shape != "chair";
  PointCloud pc;
  pc.points.reserve(recipe.points);
  Vec3 v{};
  for (std::size_t i = 0; i < recipe.points; ++i) {
    if (mirrored && i % 2 == 1) {
      for (auto& c : v) c = -c;
    } else {
      const double pick = rng.uniform() * total;
      std::size_t part = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) -
                                                  cumulative.begin());
      part = std::min(part, parts.size() - 1);
      v = parts[part].sample(rng);
      for (int a = 0; a < 3; ++a) v[a] *= stretch[a];
    }
    Vec3 w = v;
    if (recipe.noise_sigma > 0.0) {
      for (auto& c : w) c += recipe.noise_sigma * rng.normal();
    }
    pc.points.push_back({static_cast<float>(w[0]), static_cast<float>(w[1]), static_cast<float>(w[2])});
  }
  return normalize_unit_sphere(pc);
}

DatasetManifest generate_synthetic_dataset(const std::vector<SyntheticClassSpec>& spec,
                                           const SyntheticOptions& opts,
                                           const std::filesystem::path& out_dir) {
  if (spec.size() < 2) throw ValidationError("synthetic dataset needs at least two shape kinds");
  const auto& kinds = synthetic_shape_kinds();
  for (const auto& c : spec) {
    if (std::find(kinds.begin(), kinds.end(), c.shape) == kinds.end()) {
      throw ValidationError("unknown shape kind: " + c.shape);
    }
  }
  DatasetManifest m;
  m.base_dir = out_dir;
  if (opts.write_files && out_dir.empty()) throw ValidationError("synthetic dataset: files need an output directory");
  if (opts.write_files) std::filesystem::create_directories(out_dir / "data");
  for (std::size_t c = 0; c < spec.size(); ++c) {
    m.classes.push_back(spec[c].shape);
    for (Split split : {Split::Train, Split::Test}) {
      const std::size_t count = split == Split::Train ? spec[c].train_count : spec[c].test_count;
      for (std::size_t i = 0; i < count; ++i) {
        char id[96];
        std::snprintf(id, sizeof(id), "%s_%s_%04zu", spec[c].shape.c_str(), to_string(split).c_str(), i);
        ShapeRecipe recipe;
        recipe.shape = spec[c].shape;
        recipe.seed = mix_seed(mix_seed(opts.seed, c), mix_seed(split == Split::Train ? 1 : 2, i));
        recipe.points = opts.points;
        recipe.noise_sigma = opts.noise_sigma;
        recipe.deform = opts.deform;
        ManifestSample s;
        s.id = id;
        s.class_index = static_cast<int>(c);
        s.split = split;
        if (opts.write_files) {
          PointCloud pc = generate_shape(recipe);
          s.file = out_dir / "data" / (s.id + ".pcld");
          write_pointcloud_file(*s.file, pc);
        } else {
          s.recipe = recipe;
        }
        m.samples.push_back(std::move(s));
      }
    }
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
    out << m.to_json().dump(2) << '\n';
  }
  validate_manifest(m);
  return m;
}

}  // namespace inornet
