#include "inornet/metrics.hpp"

#include <set>
#include <stdexcept>

namespace inornet {
namespace {

void check_aligned(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) throw std::invalid_argument("metrics: prediction/label length mismatch");
  if (labels.empty()) throw std::invalid_argument("metrics: no samples");
}

struct Confusion {
  std::vector<double> tp, fp, fn;
  std::set<int> labeled;
};

Confusion confusion(std::span<const int> preds, std::span<const int> labels, int classes) {
  check_aligned(preds, labels);
  Confusion c{std::vector<double>(classes), std::vector<double>(classes), std::vector<double>(classes), {}};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = preds[i], y = labels[i];
    if (p < 0 || p >= classes || y < 0 || y >= classes) throw std::out_of_range("metrics: class index >= K");
    c.labeled.insert(y);
    if (p == y) {
      c.tp[y] += 1;
    } else {
      c.fp[p] += 1;
      c.fn[y] += 1;
    }
  }
  return c;
}

}  // namespace

double top1_accuracy(std::span<const int> preds, std::span<const int> labels) {
  check_aligned(preds, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += preds[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double macro_f1(std::span<const int> preds, std::span<const int> labels, int classes) {
  const auto c = confusion(preds, labels, classes);
  double total = 0.0;
  for (int k : c.labeled) {
    const double denom = 2 * c.tp[k] + c.fp[k] + c.fn[k];
    total += denom > 0 ? 2 * c.tp[k] / denom : 0.0;
  }
  return total / static_cast<double>(c.labeled.size());
}

double macro_recall(std::span<const int> preds, std::span<const int> labels, int classes) {
  const auto c = confusion(preds, labels, classes);
  double total = 0.0;
  for (int k : c.labeled) total += c.tp[k] / (c.tp[k] + c.fn[k]);
  return total / static_cast<double>(c.labeled.size());
}

std::map<int, double> per_class_accuracy(std::span<const int> preds, std::span<const int> labels) {
  check_aligned(preds, labels);
  std::map<int, std::pair<int, int>> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& [hit, n] = counts[labels[i]];
    hit += preds[i] == labels[i];
    ++n;
  }
  std::map<int, double> out;
  for (const auto& [k, hn] : counts) out[k] = static_cast<double>(hn.first) / hn.second;
  return out;
}

StateMetrics score_state(int state, std::span<const int> preds, std::span<const int> labels, int classes,
                         const std::vector<std::string>& class_names) {
  StateMetrics m;
  m.state = state;
  m.top1 = top1_accuracy(preds, labels);
  m.macro_f1 = macro_f1(preds, labels, classes);
  m.macro_recall = macro_recall(preds, labels, classes);
  for (const auto& [k, acc] : per_class_accuracy(preds, labels)) {
    const auto name = static_cast<std::size_t>(k) < class_names.size() ? class_names[k] : std::to_string(k);
    m.per_class[name] = acc;
  }
  return m;
}

double RunMetrics::avg_top1() const {
  if (states.empty()) throw std::invalid_argument("avg_top1: no states");
  double s = 0.0;
  for (const auto& st : states) s += st.top1;
  return s / static_cast<double>(states.size());
}

nlohmann::json RunMetrics::to_json() const {
  nlohmann::json st = nlohmann::json::array();
  for (const auto& s : states) {
    st.push_back({{"s", s.state},
                  {"top1", s.top1},
                  {"macro_f1", s.macro_f1},
                  {"macro_recall", s.macro_recall},
                  {"per_class", s.per_class}});
  }
  return {{"run_id", run_id}, {"seed", seed}, {"sfc", sfc},
          {"schedule", schedule}, {"states", st}, {"avg_top1", states.empty() ? 0.0 : avg_top1()}};
}

RunMetrics RunMetrics::from_json(const nlohmann::json& j) {
  RunMetrics r;
  r.run_id = j.at("run_id").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.sfc = j.value("sfc", true);
  r.schedule = j.value("schedule", nlohmann::json::array());
  for (const auto& s : j.at("states")) {
    StateMetrics m;
    m.state = s.at("s").get<int>();
    m.top1 = s.at("top1").get<double>();
    m.macro_f1 = s.at("macro_f1").get<double>();
    m.macro_recall = s.at("macro_recall").get<double>();
    m.per_class = s.value("per_class", std::map<std::string, double>{});
    r.states.push_back(std::move(m));
  }
  return r;
}

}  // namespace inornet
