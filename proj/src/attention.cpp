#include "inornet/attention.hpp"

#include <stdexcept>

namespace inornet {
namespace {

void add_dense(ParameterSet& params, const std::string& name, ParamGroup group, Index in, Index out, Rng& rng) {
  params.add(name + ".w", group, he_uniform(in, out, in, rng));
  params.add(name + ".b", group, uniform_fan_in(1, out, in, rng));
}

Var dense(Binding& bind, Var x, const std::string& name) { return linear(x, bind(name + ".w"), bind(name + ".b")); }

Index index_of_max(const RowVec& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

}  // namespace

void add_attention_params(ParameterSet& params, const ModelDims& dims, Rng& rng) {
  const Index ds = dims.structure_width;
  if (dims.attention_ratio < 1 || ds % dims.attention_ratio != 0) {
    throw std::invalid_argument("attention ratio must divide the structure width");
  }
  const Index reduced = ds / dims.attention_ratio;
  add_dense(params, "attention.down", ParamGroup::Attention, ds, reduced, rng);
  add_dense(params, "attention.up", ParamGroup::Attention, reduced, ds, rng);
}

void add_critic_params(ParameterSet& params, const ModelDims& dims, Rng& rng) {
  const Index ds = dims.structure_width, L = dims.structures, cc = dims.critic_conv;
  add_dense(params, "critic.state.conv", ParamGroup::Critic, 3 * ds, cc, rng);
  add_dense(params, "critic.state.fc1", ParamGroup::Critic, L * cc, dims.critic_state_hidden, rng);
  add_dense(params, "critic.state.fc2", ParamGroup::Critic, dims.critic_state_hidden, dims.critic_branch, rng);
  add_dense(params, "critic.policy.conv", ParamGroup::Critic, 3 * ds, cc, rng);
  add_dense(params, "critic.policy.fc", ParamGroup::Critic, L * cc, dims.critic_branch, rng);
  add_dense(params, "critic.fusion", ParamGroup::Critic, 2 * dims.critic_branch, 1, rng);
}

AttentionBundle geometric_attention(Binding& bind, Var f_m, const ModelDims& dims) {
  if (dims.attention_ratio < 1 || f_m.cols() % dims.attention_ratio != 0) {
    throw std::invalid_argument("geometric_attention: ratio does not divide d_s");
  }
  AttentionBundle b;
  b.f_m = f_m;
  b.A_m = sigmoid(dense(bind, relu(dense(bind, f_m, "attention.down")), "attention.up"));
  b.f_p = residual_attend(f_m, b.A_m);
  return b;
}

Var residual_attend(Var f_m, Var attention_map) { return add(mul(attention_map, f_m), f_m); }

Var global_pool(Var features) {
  if (features.rows() < 1) throw std::invalid_argument("global_pool: no structures");
  return col_max(features);
}

AttentionBundle& with_globals(AttentionBundle& bundle) {
  bundle.f_g = global_pool(bundle.f_p);
  bundle.f_g_prime = bundle.f_m.value().colwise().maxCoeff();
  return bundle;
}

Var critic_gain(Binding& bind, Var f_p, Var A_m, const ModelDims& dims) {
  if (f_p.rows() != A_m.rows() || f_p.cols() != A_m.cols() || f_p.rows() != dims.structures) {
    throw std::invalid_argument("critic_gain: inputs must both be L x d_s");
  }
  const Index flat = dims.structures * dims.critic_conv;
  // Conv blocks: kernel 3 along the structure axis, length preserved, ReLU.
  Var state = relu(dense(bind, unfold3(f_p), "critic.state.conv"));
  state = relu(dense(bind, reshape(state, 1, flat), "critic.state.fc1"));
  state = dense(bind, state, "critic.state.fc2");
  Var policy = relu(dense(bind, unfold3(A_m), "critic.policy.conv"));
  policy = dense(bind, reshape(policy, 1, flat), "critic.policy.fc");
  return dense(bind, concat_cols(state, policy), "critic.fusion");
}

double critic_loss(std::span<const double> gains) {
  if (gains.empty()) throw std::invalid_argument("critic_loss: empty batch");
  double s = 0.0;
  for (double g : gains) s -= g;
  return s / static_cast<double>(gains.size());
}

Var critic_loss(std::span<const Var> gains) {
  if (gains.empty()) throw std::invalid_argument("critic_loss: empty batch");
  Var total = gains[0];
  for (std::size_t i = 1; i < gains.size(); ++i) total = add(total, gains[i]);
  return scale(total, -1.0 / static_cast<double>(gains.size()));
}

int classification_reward(const RowVec& scores, Index label) {
  if (scores.size() < 1) throw std::invalid_argument("classification_reward: empty score vector");
  return index_of_max(scores) == label ? 1 : 0;
}

int amelioration_reward(double prob_with, double prob_without) { return prob_with > prob_without ? 1 : 0; }

double regression_loss(std::span<const double> gains, std::span<const double> rewards) {
  if (gains.size() != rewards.size()) throw std::invalid_argument("regression_loss: length mismatch");
  if (gains.empty()) throw std::invalid_argument("regression_loss: empty batch");
  double s = 0.0;
  for (std::size_t i = 0; i < gains.size(); ++i) s += (gains[i] - rewards[i]) * (gains[i] - rewards[i]);
  return s / static_cast<double>(gains.size());
}

Var regression_loss(std::span<const Var> gains, std::span<const double> rewards) {
  if (gains.size() != rewards.size()) throw std::invalid_argument("regression_loss: length mismatch");
  if (gains.empty()) throw std::invalid_argument("regression_loss: empty batch");
  Var total;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    Var diff = sub(gains[i], gains[i].tape->constant(Mat::Constant(1, 1, rewards[i])));
    Var sq = mul(diff, diff);
    total = total.valid() ? add(total, sq) : sq;
  }
  return scale(total, 1.0 / static_cast<double>(gains.size()));
}

}  // namespace inornet
