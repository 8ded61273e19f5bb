#include "inornet/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace inornet {
namespace {

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

const RunMetrics* find_run(const std::vector<RunMetrics>& runs, const std::string& id) {
  for (const auto& r : runs) {
    if (r.run_id == id) return &r;
  }
  return nullptr;
}

void check_comparable(const RunMetrics& run, const RunMetrics& ref) {
  if (run.schedule != ref.schedule) throw ValidationError("run " + run.run_id + " uses a different schedule than " + ref.run_id);
  if (run.seed != ref.seed) throw ValidationError("run " + run.run_id + " uses a different seed than " + ref.run_id);
  if (run.states.size() != ref.states.size()) throw ValidationError("run " + run.run_id + " has a different state count");
}

}  // namespace

std::string metrics_csv(const RunMetrics& run) {
  std::ostringstream out;
  out << "state,top1,macro_f1,macro_recall\n";
  double f1 = 0.0, recall = 0.0;
  for (const auto& s : run.states) {
    out << s.state << ',' << fmt(s.top1) << ',' << fmt(s.macro_f1) << ',' << fmt(s.macro_recall) << '\n';
    f1 += s.macro_f1;
    recall += s.macro_recall;
  }
  if (!run.states.empty()) {
    const double n = static_cast<double>(run.states.size());
    out << "Avg," << fmt(run.avg_top1()) << ',' << fmt(f1 / n) << ',' << fmt(recall / n) << '\n';
  }
  return out.str();
}

std::string loss_trace_csv(const std::vector<EpochRecord>& trace) {
  std::ostringstream out;
  out << "state,epoch,clc,cst,cri,reg,objective,wfc_factor\n";
  for (const auto& e : trace) {
    out << e.state << ',' << e.epoch << ',' << fmt(e.losses.clc, "%.17g") << ',' << fmt(e.losses.cst, "%.17g") << ','
        << fmt(e.losses.cri, "%.17g") << ',' << fmt(e.losses.reg, "%.17g") << ',' << fmt(e.objective, "%.17g") << ','
        << fmt(e.wfc_factor, "%.17g") << '\n';
  }
  return out.str();
}

nlohmann::json plot_data(const std::vector<RunMetrics>& runs) {
  nlohmann::json x = nlohmann::json::array(), series = nlohmann::json::object();
  std::size_t longest = 0;
  for (const auto& r : runs) {
    nlohmann::json ys = nlohmann::json::array();
    for (const auto& s : r.states) ys.push_back(s.top1);
    series[r.run_id] = ys;
    longest = std::max(longest, r.states.size());
  }
  for (std::size_t s = 1; s <= longest; ++s) x.push_back(s);
  return {{"x", x}, {"series", series}};
}

nlohmann::json merge_report(const std::vector<RunMetrics>& runs, const std::string& reference) {
  if (runs.empty()) throw std::invalid_argument("report: no runs");
  const RunMetrics* ref = nullptr;
  if (!reference.empty()) {
    ref = find_run(runs, reference);
    if (!ref) throw ValidationError("report: reference run '" + reference + "' not among the inputs");
  }
  nlohmann::json out = {{"reference", reference.empty() ? nlohmann::json(nullptr) : nlohmann::json(reference)},
                        {"runs", nlohmann::json::array()}};
  for (const auto& r : runs) {
    nlohmann::json j = r.to_json();
    if (ref) {
      check_comparable(r, *ref);
      nlohmann::json deltas = nlohmann::json::array();
      for (std::size_t i = 0; i < r.states.size(); ++i) deltas.push_back(100.0 * (r.states[i].top1 - ref->states[i].top1));
      j["delta_top1_pp"] = deltas;
      j["delta_avg_top1_pp"] = 100.0 * (r.avg_top1() - ref->avg_top1());
    }
    out["runs"].push_back(j);
  }
  return out;
}

std::string report_csv(const std::vector<RunMetrics>& runs, const std::string& reference) {
  const auto merged = merge_report(runs, reference);
  const bool deltas = !reference.empty();
  std::ostringstream out;
  out << "run,state,top1,macro_f1,macro_recall" << (deltas ? ",delta_top1_pp" : "") << '\n';
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& r = runs[k];
    const auto& j = merged["runs"][k];
    double f1 = 0.0, recall = 0.0;
    for (std::size_t i = 0; i < r.states.size(); ++i) {
      const auto& s = r.states[i];
      out << r.run_id << ',' << s.state << ',' << fmt(s.top1) << ',' << fmt(s.macro_f1) << ',' << fmt(s.macro_recall);
      if (deltas) out << ',' << fmt(j["delta_top1_pp"][i].get<double>(), "%.4f");
      out << '\n';
      f1 += s.macro_f1;
      recall += s.macro_recall;
    }
    if (r.states.empty()) continue;
    const double n = static_cast<double>(r.states.size());
    out << r.run_id << ",Avg," << fmt(r.avg_top1()) << ',' << fmt(f1 / n) << ',' << fmt(recall / n);
    if (deltas) out << ',' << fmt(j["delta_avg_top1_pp"].get<double>(), "%.4f");
    out << '\n';
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

RunMetrics read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file " + path.string());
  try {
    return RunMetrics::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad metrics file " + path.string() + ": " + e.what());
  }
}

}  // namespace inornet
