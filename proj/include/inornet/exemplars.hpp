#pragma once

#include "inornet/common.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace inornet {

/// Herding selection: greedily picks rows of `features` (n x d) so that the
/// running mean of the picked rows stays closest to the mean of all rows.
/// Returns row positions in selection order; ties go to the smaller row.
/// Throws std::invalid_argument if `quota` exceeds the row count.
std::vector<std::size_t> herding_select(const Mat& features, std::size_t quota);

/// Per-class quota floor(budget / classes), with the remainder handed one
/// each to the lowest class positions.
std::vector<std::size_t> exemplar_quotas(std::size_t budget, std::size_t classes);

/// Fixed-budget exemplar memory keyed by classifier column.
class ExemplarStore {
 public:
  explicit ExemplarStore(std::size_t budget = 0) : budget_(budget) {}

  std::size_t budget() const { return budget_; }
  const std::map<int, std::vector<std::string>>& classes() const { return ids_; }
  std::size_t size() const;
  bool empty() const { return size() == 0; }

  /// Stores `ids` (already ordered by priority) for a new class.
  void set_class(int cls, std::vector<std::string> ids);
  /// Shrinks every list to the quota for the current class count; earlier
  /// picks are kept.
  void rebalance(const std::vector<int>& class_order);

  nlohmann::json to_json() const;
  static ExemplarStore from_json(const nlohmann::json& j);

 private:
  std::size_t budget_;
  std::map<int, std::vector<std::string>> ids_;
};

}  // namespace inornet
