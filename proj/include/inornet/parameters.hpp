#pragma once

#include "inornet/autograd.hpp"

#include <map>
#include <string>
#include <vector>

namespace inornet {

/// Optimizer partition of the trainable parameters.
enum class ParamGroup {
  EncoderClassifier,  // encoder, offset/structure/embedding layers, classifier
  Attention,          // channel down/up-scaling layers
  Critic,             // two-branch critic
};

std::string to_string(ParamGroup g);
ParamGroup param_group_from_string(const std::string& s);

struct Parameter {
  std::string name;
  ParamGroup group = ParamGroup::EncoderClassifier;
  Mat value;
};

/// Ordered, name-addressable parameter collection.
class ParameterSet {
 public:
  std::size_t add(std::string name, ParamGroup group, Mat value);
  std::size_t index(const std::string& name) const;
  bool contains(const std::string& name) const { return by_name_.count(name) != 0; }

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter& at(const std::string& name) { return params_[index(name)]; }
  const Parameter& at(const std::string& name) const { return params_[index(name)]; }

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t scalar_count() const;

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> by_name_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), the default torch Linear/Conv init.
Mat uniform_fan_in(Index rows, Index cols, Index fan_in, Rng& rng);
/// Uniform(-sqrt(6/fan_in), sqrt(6/fan_in)); keeps ReLU activations at unit
/// scale through deep stacks without normalisation layers.
Mat he_uniform(Index rows, Index cols, Index fan_in, Rng& rng);

/// Binds parameters onto a tape lazily, one leaf per parameter per tape.
class Binding {
 public:
  Binding(Tape& tape, const ParameterSet& params) : tape_(&tape), params_(&params), vars_(params.size()) {}

  Var operator()(const std::string& name);
  Var operator()(std::size_t index);

  Tape& tape() const { return *tape_; }
  /// Gradients of the tape's last backward pass, one entry per parameter
  /// (empty matrix for parameters that were never bound).
  std::vector<Mat> gradients() const;
  bool bound(std::size_t index) const { return vars_[index].valid(); }
  Var var(std::size_t index) const { return vars_[index]; }

 private:
  Tape* tape_;
  const ParameterSet* params_;
  std::vector<Var> vars_;
};

}  // namespace inornet
