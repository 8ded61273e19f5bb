#include "inornet/parameters.hpp"

#include <cmath>
#include <stdexcept>

namespace inornet {

std::string to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::EncoderClassifier:
      return "encoder_classifier";
    case ParamGroup::Attention:
      return "attention";
    case ParamGroup::Critic:
      return "critic";
  }
  return "unknown";
}

ParamGroup param_group_from_string(const std::string& s) {
  if (s == "encoder_classifier") return ParamGroup::EncoderClassifier;
  if (s == "attention") return ParamGroup::Attention;
  if (s == "critic") return ParamGroup::Critic;
  throw ParseError("unknown parameter group: " + s);
}

std::size_t ParameterSet::add(std::string name, ParamGroup group, Mat value) {
  if (by_name_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  by_name_[name] = params_.size();
  params_.push_back({std::move(name), group, std::move(value)});
  return params_.size() - 1;
}

std::size_t ParameterSet::index(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

Mat uniform_fan_in(Index rows, Index cols, Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Mat m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

Mat he_uniform(Index rows, Index cols, Index fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Mat m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

Var Binding::operator()(const std::string& name) { return (*this)(params_->index(name)); }

Var Binding::operator()(std::size_t index) {
  if (!vars_[index].valid()) vars_[index] = tape_->variable((*params_)[index].value);
  return vars_[index];
}

std::vector<Mat> Binding::gradients() const {
  std::vector<Mat> out(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].valid()) out[i] = tape_->grad(vars_[i]);
  }
  return out;
}

}  // namespace inornet
