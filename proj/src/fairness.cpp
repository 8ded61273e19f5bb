#include "inornet/fairness.hpp"

#include <stdexcept>

namespace inornet {

RowVec column_norms(const Mat& m) { return m.colwise().norm(); }

double weight_fairness_compensation(Mat& last_layer, Index old_classes, Index new_classes) {
  if (old_classes < 0 || new_classes < 0 || old_classes + new_classes != last_layer.cols()) {
    throw std::invalid_argument("weight_fairness_compensation: column split does not match the layer");
  }
  if (old_classes == 0 || new_classes == 0) return 1.0;
  const RowVec norms = column_norms(last_layer);
  const double old_mean = norms.head(old_classes).mean();
  const auto new_norms = norms.tail(new_classes);
  if ((new_norms.array() == 0.0).any()) {
    throw std::domain_error("weight_fairness_compensation: zero-norm new-class column");
  }
  const double factor = old_mean / new_norms.mean();
  last_layer.rightCols(new_classes) *= factor;
  return factor;
}

Index argmax(const RowVec& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

void ScoreStats::set_class(int cls, ClassStat stat) {
  if (per_class_.count(cls)) {
    throw std::logic_error("score statistics for class " + std::to_string(cls) + " already recorded");
  }
  per_class_[cls] = stat;
}

void ScoreStats::set_state_mean(int state, double psi_new_mean) { per_state_[state] = psi_new_mean; }

void ScoreStats::set_current(int state, std::map<int, double> psi_current) {
  current_state_ = state;
  current_ = std::move(psi_current);
}

nlohmann::json ScoreStats::to_json() const {
  nlohmann::json classes = nlohmann::json::object(), states = nlohmann::json::object(),
                 current = nlohmann::json::object();
  for (const auto& [k, s] : per_class_) {
    classes[std::to_string(k)] = {{"psi_init", s.psi_init}, {"initial_state", s.initial_state}};
  }
  for (const auto& [s, v] : per_state_) states[std::to_string(s)] = {{"psi_new_mean", v}};
  for (const auto& [k, v] : current_) current[std::to_string(k)] = v;
  return {{"per_class", classes}, {"per_state", states}, {"current_state", current_state_}, {"psi_current", current}};
}

ScoreStats ScoreStats::from_json(const nlohmann::json& j) {
  ScoreStats s;
  for (const auto& [k, v] : j.at("per_class").items()) {
    s.per_class_[std::stoi(k)] = {v.at("psi_init").get<double>(), v.at("initial_state").get<int>()};
  }
  for (const auto& [k, v] : j.at("per_state").items()) s.per_state_[std::stoi(k)] = v.at("psi_new_mean").get<double>();
  s.current_state_ = j.value("current_state", 0);
  if (j.contains("psi_current")) {
    for (const auto& [k, v] : j.at("psi_current").items()) s.current_[std::stoi(k)] = v.get<double>();
  }
  return s;
}

namespace {

struct Mean {
  double sum = 0.0;
  int n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  double value() const { return sum / n; }
};

// Mean top score over samples predicted as one of `classes`, keyed per class
// and pooled; falls back to the labeled-class probability.
std::map<int, double> per_class_means(std::span<const RowVec> probs, std::span<const int> labels,
                                      const std::set<int>& classes, bool skip_missing = false) {
  if (probs.size() != labels.size()) throw std::invalid_argument("score statistics: probs/labels mismatch");
  std::map<int, Mean> predicted, labeled;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const Index k = argmax(probs[i]);
    if (classes.count(static_cast<int>(k))) predicted[static_cast<int>(k)].add(probs[i](k));
    if (classes.count(labels[i])) labeled[labels[i]].add(probs[i](labels[i]));
  }
  std::map<int, double> out;
  for (int k : classes) {
    if (predicted.count(k)) {
      out[k] = predicted[k].value();
    } else if (labeled.count(k)) {
      out[k] = labeled[k].value();
    } else if (!skip_missing) {
      throw std::invalid_argument("score statistics: no sample predicted or labeled as class " + std::to_string(k));
    }
  }
  return out;
}

}  // namespace

void record_score_statistics(ScoreStats& stats, int state, std::span<const RowVec> probs, std::span<const int> labels,
                             const std::set<int>& new_classes) {
  const auto means = per_class_means(probs, labels, new_classes);
  Mean pooled, fallback;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const Index k = argmax(probs[i]);
    if (new_classes.count(static_cast<int>(k))) pooled.add(probs[i](k));
    if (new_classes.count(labels[i])) fallback.add(probs[i](labels[i]));
  }
  for (const auto& [k, psi] : means) stats.set_class(k, {psi, state});
  stats.set_state_mean(state, pooled.n > 0 ? pooled.value() : fallback.value());
}

void record_current_scores(ScoreStats& stats, int state, std::span<const RowVec> probs, std::span<const int> labels,
                           const std::set<int>& past_classes) {
  auto means = per_class_means(probs, labels, past_classes, true);
  for (int k : past_classes) {
    if (means.count(k)) continue;
    auto it = stats.per_class().find(k);
    if (it == stats.per_class().end()) {
      throw std::out_of_range("missing score statistic for class " + std::to_string(k));
    }
    means[k] = it->second.psi_init;
  }
  stats.set_current(state, std::move(means));
}

RowVec score_fairness_compensation(const RowVec& probs, const ScoreStats& stats, int state,
                                   const std::set<int>& current_new_classes) {
  if (!current_new_classes.count(static_cast<int>(argmax(probs)))) return probs;
  auto state_mean = [&](int s) {
    auto it = stats.per_state().find(s);
    if (it == stats.per_state().end()) throw std::out_of_range("no new-class mean recorded for state " + std::to_string(s));
    if (it->second == 0.0) throw std::domain_error("zero new-class mean score");
    return it->second;
  };
  RowVec out = probs;
  const double psi_now = state_mean(state);
  for (Index k = 0; k < probs.size(); ++k) {
    const int cls = static_cast<int>(k);
    if (current_new_classes.count(cls)) continue;
    auto it = stats.per_class().find(cls);
    if (it == stats.per_class().end()) {
      throw std::out_of_range("missing score statistic for class " + std::to_string(cls));
    }
    const auto& init = it->second;
    if (init.initial_state >= state) continue;
    auto cur = stats.current().find(cls);
    if (cur == stats.current().end()) {
      throw std::out_of_range("missing current-state score for class " + std::to_string(cls));
    }
    if (cur->second == 0.0) throw std::domain_error("zero current-state score");
    out(k) = probs(k) * (init.psi_init / cur->second) * (psi_now / state_mean(init.initial_state));
  }
  return out;
}

}  // namespace inornet
