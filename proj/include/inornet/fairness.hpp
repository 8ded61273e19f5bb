#pragma once

// Dual adaptive fairness compensations: classifier weight-norm rebalancing
// during training and statistics-based score rectification at inference.
//
// Class indices here are classifier columns, i.e. positions in the order in
// which classes were introduced.

#include "inornet/common.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <set>
#include <span>

namespace inornet {

/// Rescales the last `new_classes` columns of `last_layer` (d_w x K) by
/// mean(old column norms) / mean(new column norms). Old columns are left
/// alone. Returns the applied factor (1 when there are no old classes).
/// Throws std::domain_error if a new column has zero norm.
double weight_fairness_compensation(Mat& last_layer, Index old_classes, Index new_classes);

/// Per-column Euclidean norms.
RowVec column_norms(const Mat& m);

class ScoreStats {
 public:
  struct ClassStat {
    double psi_init = 0.0;  // mean top score in the class's first state
    int initial_state = 0;
  };

  const std::map<int, ClassStat>& per_class() const { return per_class_; }
  const std::map<int, double>& per_state() const { return per_state_; }
  const std::map<int, double>& current() const { return current_; }
  int current_state() const { return current_state_; }

  void set_class(int cls, ClassStat stat);
  void set_state_mean(int state, double psi_new_mean);
  void set_current(int state, std::map<int, double> psi_current);

  nlohmann::json to_json() const;
  static ScoreStats from_json(const nlohmann::json& j);

 private:
  std::map<int, ClassStat> per_class_;
  std::map<int, double> per_state_;
  std::map<int, double> current_;
  int current_state_ = 0;
};

/// Records ψ_{s_i}(k) for each class in `new_classes` and ψ(s) from softmax
/// outputs over a state's training data. The mean is over the top score of
/// samples predicted as k; if none is, the mean probability of k over
/// samples labeled k is used. Throws std::logic_error if a class was already
/// recorded, std::invalid_argument if a statistic has no samples at all.
void record_score_statistics(ScoreStats& stats, int state, std::span<const RowVec> probs,
                             std::span<const int> labels, const std::set<int>& new_classes);

/// Records ψ_s(k) for past classes from the current state's data (the exemplars).
/// A class with no predicted or labeled sample keeps ψ_s(k) = ψ_{s_i}(k).
void record_current_scores(ScoreStats& stats, int state, std::span<const RowVec> probs,
                           std::span<const int> labels, const std::set<int>& past_classes);

/// Applies ψ_{s_i}(k)/ψ_s(k) · ψ(s)/ψ(s_i) to every past class when the
/// argmax falls in `current_new_classes`; otherwise returns `probs` as is.
/// Output is not renormalised.
RowVec score_fairness_compensation(const RowVec& probs, const ScoreStats& stats, int state,
                                   const std::set<int>& current_new_classes);

/// argmax with ties to the smallest index.
Index argmax(const RowVec& v);

}  // namespace inornet
