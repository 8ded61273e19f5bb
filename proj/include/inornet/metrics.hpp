#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace inornet {

/// Fraction of exact matches. Throws std::invalid_argument on length
/// mismatch or empty input.
double top1_accuracy(std::span<const int> preds, std::span<const int> labels);

/// Unweighted mean of per-class F1 over classes that occur in `labels`.
/// A class with zero precision+recall denominator scores 0.
double macro_f1(std::span<const int> preds, std::span<const int> labels, int classes);
/// Unweighted mean of per-class recall over classes that occur in `labels`.
double macro_recall(std::span<const int> preds, std::span<const int> labels, int classes);

/// Accuracy per labeled class.
std::map<int, double> per_class_accuracy(std::span<const int> preds, std::span<const int> labels);

struct StateMetrics {
  int state = 0;
  double top1 = 0.0;
  double macro_f1 = 0.0;
  double macro_recall = 0.0;
  std::map<std::string, double> per_class;
};

StateMetrics score_state(int state, std::span<const int> preds, std::span<const int> labels, int classes,
                         const std::vector<std::string>& class_names);

struct RunMetrics {
  std::string run_id;
  std::uint64_t seed = 0;
  bool sfc = true;
  nlohmann::json schedule = nlohmann::json::array();
  std::vector<StateMetrics> states;

  /// Mean per-state top-1 (the across-state "Avg.").
  double avg_top1() const;
  nlohmann::json to_json() const;
  static RunMetrics from_json(const nlohmann::json& j);
};

}  // namespace inornet
