#include "inornet/model.hpp"

#include <stdexcept>

namespace inornet {

ModelDims ModelDims::full() { return ModelDims{}; }

ModelDims ModelDims::desk() {
  ModelDims d;
  d.tnet_hidden = 16;
  d.encoder = {16, 32, 64};
  d.structure_width = 64;
  d.embed_width = 32;
  d.attention_ratio = 4;
  d.critic_conv = 8;
  d.critic_state_hidden = 32;
  d.critic_branch = 16;
  d.classifier_hidden = {32, 16};
  d.structures = 16;
  d.neighbors = 8;
  return d;
}

nlohmann::json ModelDims::to_json() const {
  return {{"tnet_hidden", tnet_hidden},
          {"encoder", encoder},
          {"structure_width", structure_width},
          {"embed_width", embed_width},
          {"attention_ratio", attention_ratio},
          {"critic_conv", critic_conv},
          {"critic_state_hidden", critic_state_hidden},
          {"critic_branch", critic_branch},
          {"classifier_hidden", classifier_hidden}};
}

ModelDims ModelDims::from_json(const nlohmann::json& j, const ModelDims& defaults) {
  ModelDims d = defaults;
  d.tnet_hidden = j.value("tnet_hidden", d.tnet_hidden);
  d.encoder = j.value("encoder", d.encoder);
  d.structure_width = j.value("structure_width", d.structure_width);
  d.embed_width = j.value("embed_width", d.embed_width);
  d.attention_ratio = j.value("attention_ratio", d.attention_ratio);
  d.critic_conv = j.value("critic_conv", d.critic_conv);
  d.critic_state_hidden = j.value("critic_state_hidden", d.critic_state_hidden);
  d.critic_branch = j.value("critic_branch", d.critic_branch);
  d.classifier_hidden = j.value("classifier_hidden", d.classifier_hidden);
  for (const auto& [key, _] : j.items()) {
    if (!d.to_json().contains(key)) throw ParseError("unknown model key: " + key);
  }
  return d;
}

void ModelDims::validate() const {
  auto positive = [](Index v, const char* what) {
    if (v < 1) throw ValidationError(std::string("model: ") + what + " must be positive");
  };
  if (encoder.empty() || classifier_hidden.empty()) throw ValidationError("model: empty layer list");
  for (Index w : encoder) positive(w, "encoder width");
  for (Index w : classifier_hidden) positive(w, "classifier width");
  positive(tnet_hidden, "tnet_hidden");
  positive(structure_width, "structure_width");
  positive(embed_width, "embed_width");
  positive(critic_conv, "critic_conv");
  positive(critic_state_hidden, "critic_state_hidden");
  positive(critic_branch, "critic_branch");
  positive(structures, "L");
  positive(neighbors, "m");
  if (attention_ratio < 1 || structure_width % attention_ratio != 0) {
    throw ValidationError("model: attention ratio must divide structure_width");
  }
}

InorNet::InorNet(ModelDims dims, std::uint64_t seed) : dims_(std::move(dims)) {
  dims_.validate();
  Rng rng(seed);
  add_reasoning_params(params_, dims_, rng);
  add_attention_params(params_, dims_, rng);
  add_critic_params(params_, dims_, rng);
  Index in = dims_.structure_width;
  for (std::size_t i = 0; i < dims_.classifier_hidden.size(); ++i) {
    const std::string name = "classifier.fc" + std::to_string(i + 1);
    const Index out = dims_.classifier_hidden[i];
    params_.add(name + ".w", ParamGroup::EncoderClassifier, he_uniform(in, out, in, rng));
    params_.add(name + ".b", ParamGroup::EncoderClassifier, uniform_fan_in(1, out, in, rng));
    in = out;
  }
  params_.add(kLastLayer, ParamGroup::EncoderClassifier, Mat(in, 0));
}

void InorNet::grow(Index count, Rng& rng) {
  Mat& w = last_layer();
  Mat grown(w.rows(), w.cols() + count);
  grown.leftCols(w.cols()) = w;
  grown.rightCols(count) = he_uniform(w.rows(), count, w.rows(), rng);
  w = std::move(grown);
}

ForwardPass InorNet::forward(Binding& bind, const PointCloud& pc, const ForwardOptions& opts) const {
  ForwardPass fp;
  fp.point_features = encode_points(bind, pc, dims_);
  fp.initial = build_structures(pc, fp.point_features, static_cast<std::size_t>(dims_.structures),
                                static_cast<std::size_t>(dims_.neighbors), opts.fps_start);
  if (opts.reasoning) {
    fp.offsets = predict_offsets(bind, pc, fp.initial, fp.point_features);
    fp.structures = update_structures(pc, fp.initial, fp.offsets.value(), fp.point_features);
  } else {
    fp.structures = fp.initial;
  }
  Var f_m = structure_features(bind, fp.structures, fp.point_features);
  if (opts.attention) {
    fp.bundle = geometric_attention(bind, f_m, dims_);
  } else {
    fp.bundle.f_m = f_m;
    fp.bundle.f_p = f_m;
  }
  with_globals(fp.bundle);
  fp.logits = classify(bind, fp.bundle.f_g);
  return fp;
}

Var InorNet::classify(Binding& bind, Var global_feature) const {
  Var h = global_feature;
  for (std::size_t i = 0; i < dims_.classifier_hidden.size(); ++i) {
    const std::string name = "classifier.fc" + std::to_string(i + 1);
    h = relu(linear(h, bind(name + ".w"), bind(name + ".b")));
  }
  if (classes() == 0) throw std::logic_error("classifier has no classes yet");
  return matmul(h, bind(kLastLayer));
}

RowVec InorNet::classify_value(const RowVec& global_feature) const {
  RowVec h = global_feature;
  for (std::size_t i = 0; i < dims_.classifier_hidden.size(); ++i) {
    const std::string name = "classifier.fc" + std::to_string(i + 1);
    h = ((h * params_.at(name + ".w").value) + params_.at(name + ".b").value).cwiseMax(0.0);
  }
  return h * last_layer();
}

}  // namespace inornet
