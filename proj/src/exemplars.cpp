#include "inornet/exemplars.hpp"

#include <limits>
#include <stdexcept>

namespace inornet {

std::vector<std::size_t> herding_select(const Mat& features, std::size_t quota) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (quota > n) throw std::invalid_argument("herding: quota exceeds available samples");
  std::vector<std::size_t> picked;
  if (quota == 0) return picked;
  const RowVec mu = features.colwise().mean();
  RowVec running = RowVec::Zero(features.cols());
  std::vector<bool> used(n, false);
  for (std::size_t j = 1; j <= quota; ++j) {
    std::size_t best = n;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      const double d = (mu - (running + features.row(static_cast<Index>(i))) / static_cast<double>(j)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    used[best] = true;
    running += features.row(static_cast<Index>(best));
    picked.push_back(best);
  }
  return picked;
}

std::vector<std::size_t> exemplar_quotas(std::size_t budget, std::size_t classes) {
  if (classes == 0) return {};
  std::vector<std::size_t> q(classes, budget / classes);
  for (std::size_t i = 0; i < budget % classes; ++i) ++q[i];
  return q;
}

std::size_t ExemplarStore::size() const {
  std::size_t n = 0;
  for (const auto& [_, v] : ids_) n += v.size();
  return n;
}

void ExemplarStore::set_class(int cls, std::vector<std::string> ids) { ids_[cls] = std::move(ids); }

void ExemplarStore::rebalance(const std::vector<int>& class_order) {
  const auto quotas = exemplar_quotas(budget_, class_order.size());
  for (std::size_t i = 0; i < class_order.size(); ++i) {
    auto it = ids_.find(class_order[i]);
    if (it != ids_.end() && it->second.size() > quotas[i]) it->second.resize(quotas[i]);
  }
}

nlohmann::json ExemplarStore::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [k, v] : ids_) classes[std::to_string(k)] = v;
  return {{"budget", budget_}, {"classes", classes}};
}

ExemplarStore ExemplarStore::from_json(const nlohmann::json& j) {
  ExemplarStore s(j.at("budget").get<std::size_t>());
  for (const auto& [k, v] : j.at("classes").items()) s.ids_[std::stoi(k)] = v.get<std::vector<std::string>>();
  return s;
}

}  // namespace inornet
