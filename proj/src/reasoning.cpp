#include "inornet/reasoning.hpp"

#include "inornet/sampling.hpp"

#include <stdexcept>

namespace inornet {
namespace {

std::string layer(const std::string& base, const char* suffix) { return base + suffix; }

void add_dense(ParameterSet& params, const std::string& name, Index in, Index out, Rng& rng) {
  params.add(name + ".w", ParamGroup::EncoderClassifier, he_uniform(in, out, in, rng));
  params.add(name + ".b", ParamGroup::EncoderClassifier, uniform_fan_in(1, out, in, rng));
}

Var dense(Binding& bind, Var x, const std::string& name) {
  return linear(x, bind(layer(name, ".w")), bind(layer(name, ".b")));
}

// Predicts a c x c transform from a U x c input and applies it.
Var align(Binding& bind, Var x, const std::string& name) {
  const Index c = x.cols();
  Var hidden = relu(dense(bind, x, name + ".fc1"));
  Var flat = dense(bind, col_max(hidden), name + ".fc2");
  Var transform = add(reshape(flat, c, c), bind.tape().constant(Mat::Identity(c, c)));
  return matmul(x, transform);
}

Mat edge_vectors(const PointCloud& pc, const LocalStructureSet& s) {
  const auto m = static_cast<std::size_t>(s.neighbors);
  Mat edges(static_cast<Index>(s.size() * m), 3);
  for (std::size_t l = 0; l < s.size(); ++l) {
    const auto nb = s.neighbors_of(l);
    for (std::size_t i = 0; i < m; ++i) {
      const auto& p = pc.points[nb[i]];
      const auto r = static_cast<Index>(l * m + i);
      edges(r, 0) = s.centroids[l][0] - static_cast<double>(p.x);
      edges(r, 1) = s.centroids[l][1] - static_cast<double>(p.y);
      edges(r, 2) = s.centroids[l][2] - static_cast<double>(p.z);
    }
  }
  return edges;
}

}  // namespace

void add_reasoning_params(ParameterSet& params, const ModelDims& dims, Rng& rng) {
  Index in = 3;
  for (std::size_t i = 0; i < dims.encoder.size(); ++i) {
    if (i < 2) {
      const std::string tnet = "encoder.tnet" + std::to_string(i + 1);
      add_dense(params, tnet + ".fc1", in, dims.tnet_hidden, rng);
      add_dense(params, tnet + ".fc2", dims.tnet_hidden, in * in, rng);
      // Alignment starts as the identity transform.
      params.at(tnet + ".fc2.w").value.setZero();
      params.at(tnet + ".fc2.b").value.setZero();
    }
    add_dense(params, "encoder.conv" + std::to_string(i + 1), in, dims.encoder[i], rng);
    in = dims.encoder[i];
  }
  add_dense(params, "reasoning.offset", dims.point_width(), 3, rng);
  add_dense(params, "reasoning.structure", dims.point_width(), dims.structure_width, rng);
  add_dense(params, "reasoning.embed_local", dims.structure_width, dims.embed_width, rng);
  add_dense(params, "reasoning.embed_proto", dims.structure_width, dims.embed_width, rng);
}

Mat cloud_matrix(const PointCloud& pc) {
  Mat x(static_cast<Index>(pc.size()), 3);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    x(static_cast<Index>(i), 0) = pc.points[i].x;
    x(static_cast<Index>(i), 1) = pc.points[i].y;
    x(static_cast<Index>(i), 2) = pc.points[i].z;
  }
  return x;
}

Var encode_points(Binding& bind, const PointCloud& pc, const ModelDims& dims) {
  return encode_points(bind, bind.tape().constant(cloud_matrix(pc)), dims);
}

Var encode_points(Binding& bind, Var points, const ModelDims& dims) {
  if (points.cols() != 3) throw std::invalid_argument("encode_points: expected U x 3 input");
  Var h = points;
  for (std::size_t i = 0; i < dims.encoder.size(); ++i) {
    if (i < 2) h = align(bind, h, "encoder.tnet" + std::to_string(i + 1));
    h = relu(dense(bind, h, "encoder.conv" + std::to_string(i + 1)));
  }
  return h;
}

LocalStructureSet build_structures(const PointCloud& pc, Var point_features, std::size_t count,
                                   std::size_t neighbors, std::size_t start_index) {
  if (neighbors < 1 || neighbors > pc.size()) throw std::out_of_range("build_structures: m out of range");
  const auto centers = farthest_point_sampling(pc, count, start_index);
  LocalStructureSet s;
  s.neighbors = static_cast<Index>(neighbors);
  s.centroids.reserve(count);
  s.neighbor_indices.reserve(count * neighbors);
  for (auto c : centers) {
    const auto& p = pc.points[c];
    s.centroids.push_back({p.x, p.y, p.z});
    const auto nb = knn_query(pc, s.centroids.back(), neighbors);
    s.neighbor_indices.insert(s.neighbor_indices.end(), nb.begin(), nb.end());
  }
  s.centroid_features = gather_rows(point_features, centers);
  return s;
}

Var predict_offsets(Binding& bind, const PointCloud& pc, const LocalStructureSet& s, Var point_features) {
  if (s.neighbors < 1) throw std::invalid_argument("predict_offsets: structures have no neighbors");
  const auto m = static_cast<std::size_t>(s.neighbors);
  std::vector<std::uint32_t> repeat;
  repeat.reserve(s.size() * m);
  for (std::size_t l = 0; l < s.size(); ++l) repeat.insert(repeat.end(), m, static_cast<std::uint32_t>(l));
  Var edge_feats = sub(gather_rows(s.centroid_features, std::move(repeat)),
                       gather_rows(point_features, s.neighbor_indices));
  Var weights = dense(bind, edge_feats, "reasoning.offset");
  Var votes = mul(weights, bind.tape().constant(edge_vectors(pc, s)));
  return group_mean(votes, s.neighbors);
}

LocalStructureSet update_structures(const PointCloud& pc, const LocalStructureSet& structures, const Mat& offsets,
                                    Var point_features) {
  if (offsets.rows() != static_cast<Index>(structures.size()) || offsets.cols() != 3) {
    throw std::invalid_argument("update_structures: offsets must be L x 3");
  }
  if (!offsets.allFinite()) throw std::invalid_argument("update_structures: non-finite offset");
  LocalStructureSet out;
  out.neighbors = structures.neighbors;
  out.centroids = structures.centroids;
  out.neighbor_indices.reserve(structures.neighbor_indices.size());
  for (std::size_t l = 0; l < out.centroids.size(); ++l) {
    for (int a = 0; a < 3; ++a) out.centroids[l][a] += offsets(static_cast<Index>(l), a);
    const auto nb = knn_query(pc, out.centroids[l], static_cast<std::size_t>(out.neighbors));
    out.neighbor_indices.insert(out.neighbor_indices.end(), nb.begin(), nb.end());
  }
  out.centroid_features = group_mean(gather_rows(point_features, out.neighbor_indices), out.neighbors);
  return out;
}

Var structure_features(Binding& bind, const LocalStructureSet& s, Var point_features) {
  Var encoded = dense(bind, gather_rows(point_features, s.neighbor_indices), "reasoning.structure");
  return group_max(encoded, s.neighbors);
}

PrototypeBank::PrototypeBank(double gamma) : gamma_(gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("PrototypeBank: gamma must lie in (0, 1)");
}

const PrototypeBank::Entry& PrototypeBank::at(int cls) const {
  auto it = entries_.find(cls);
  if (it == entries_.end()) throw std::out_of_range("no prototype for class " + std::to_string(cls));
  return it->second;
}

void PrototypeBank::ema_update(const std::map<int, RowVec>& estimates, int state) {
  for (const auto& [cls, est] : estimates) {
    auto it = entries_.find(cls);
    if (it == entries_.end()) {
      entries_.emplace(cls, Entry{est, state});
    } else {
      it->second.prototype = gamma_ * it->second.prototype + (1.0 - gamma_) * est;
    }
  }
}

nlohmann::json PrototypeBank::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [cls, e] : entries_) {
    std::vector<double> proto(e.prototype.data(), e.prototype.data() + e.prototype.size());
    classes[std::to_string(cls)] = {{"proto", proto}, {"initial_state", e.initial_state}};
  }
  return {{"gamma", gamma_}, {"classes", classes}};
}

PrototypeBank PrototypeBank::from_json(const nlohmann::json& j) {
  PrototypeBank bank(j.at("gamma").get<double>());
  for (const auto& [key, e] : j.at("classes").items()) {
    const auto proto = e.at("proto").get<std::vector<double>>();
    RowVec v = Eigen::Map<const RowVec>(proto.data(), static_cast<Index>(proto.size()));
    bank.entries_.emplace(std::stoi(key), Entry{v, e.at("initial_state").get<int>()});
  }
  return bank;
}

std::map<int, RowVec> batch_prototypes(const Mat& global_features, std::span<const int> labels) {
  if (global_features.rows() != static_cast<Index>(labels.size())) {
    throw std::invalid_argument("batch_prototypes: feature/label count mismatch");
  }
  std::map<int, RowVec> sums;
  std::map<int, int> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = sums.try_emplace(labels[i], RowVec::Zero(global_features.cols()));
    it->second += global_features.row(static_cast<Index>(i));
    ++counts[labels[i]];
  }
  for (auto& [cls, v] : sums) v /= static_cast<double>(counts[cls]);
  return sums;
}

RowVec normalize_embed(const RowVec& x, bool centered_norm) {
  Tape tape;
  return normalize_rows(tape.constant(x), centered_norm).value().row(0);
}

Var consistency_loss(Binding& bind, Var structure_feats, const PrototypeBank& bank, int label,
                     const ConsistencyOptions& opts) {
  if (!bank.initialized(label)) {
    throw std::invalid_argument("consistency_loss: class " + std::to_string(label) + " has no prototype");
  }
  const auto& entries = bank.entries();
  Mat protos(static_cast<Index>(entries.size()), structure_feats.cols());
  Index true_row = 0, r = 0;
  for (const auto& [cls, e] : entries) {
    if (cls == label) true_row = r;
    protos.row(r++) = e.prototype;
  }
  Tape& t = bind.tape();
  Var local = normalize_rows(dense(bind, structure_feats, "reasoning.embed_local"), opts.centered_norm);
  Var global = normalize_rows(dense(bind, t.constant(std::move(protos)), "reasoning.embed_proto"), opts.centered_norm);
  return consistency_logsumexp(local, global, true_row, opts.tau);
}

}  // namespace inornet
