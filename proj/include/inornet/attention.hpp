#pragma once

// Critic-induced geometric attention: residual channel attention over local
// structures, the two-branch critic, and the reward/critic losses.

#include "inornet/dims.hpp"
#include "inornet/parameters.hpp"

#include <span>

namespace inornet {

void add_attention_params(ParameterSet& params, const ModelDims& dims, Rng& rng);
void add_critic_params(ParameterSet& params, const ModelDims& dims, Rng& rng);

struct AttentionBundle {
  Var f_m;  // L x d_s
  Var A_m;  // L x d_s, in (0, 1)
  Var f_p;  // A_m ⊙ f_m + f_m
  Var f_g;  // max-pool of f_p
  RowVec f_g_prime;  // max-pool of f_m (attention-free), value only
};

/// A_m = sigmoid(Γ_u(relu(Γ_d(f_m)))), f_p = A_m ⊙ f_m + f_m. Pooled globals
/// are left unset; see `with_globals`.
AttentionBundle geometric_attention(Binding& bind, Var f_m, const ModelDims& dims);

/// f_m + A ⊙ f_m for an externally supplied map.
Var residual_attend(Var f_m, Var attention_map);

/// Elementwise max over the structure axis.
Var global_pool(Var features);

/// Fills f_g and f_g′.
AttentionBundle& with_globals(AttentionBundle& bundle);

/// Scalar gain V_cri = Γ_c(f_p, A_m) (1 x 1).
Var critic_gain(Binding& bind, Var f_p, Var A_m, const ModelDims& dims);

/// L_cri = mean(-V).
double critic_loss(std::span<const double> gains);
Var critic_loss(std::span<const Var> gains);

struct Reward {
  int classification = 0;  // R_c
  int amelioration = 0;    // R_a
  int total() const { return classification + amelioration; }
};

/// 1 iff argmax(scores) == label (smallest index wins ties).
int classification_reward(const RowVec& scores, Index label);
/// 1 iff the attended probability strictly exceeds the attention-free one.
int amelioration_reward(double prob_with, double prob_without);

/// L_reg = mean((V - R)^2). Rewards are constants.
double regression_loss(std::span<const double> gains, std::span<const double> rewards);
Var regression_loss(std::span<const Var> gains, std::span<const double> rewards);

}  // namespace inornet
