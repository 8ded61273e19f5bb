#pragma once

#include "inornet/metrics.hpp"
#include "inornet/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace inornet {

/// "state,top1,macro_f1,macro_recall" rows plus a final Avg row.
std::string metrics_csv(const RunMetrics& run);
/// Per-epoch loss trace as CSV.
std::string loss_trace_csv(const std::vector<EpochRecord>& trace);
/// {"x": [states...], "series": {run_id: [top1...]}}.
nlohmann::json plot_data(const std::vector<RunMetrics>& runs);

/// Merged report of several runs; with a reference, each run gains
/// per-state and average top-1 deltas in percentage points. Throws
/// ValidationError if a run's schedule or seed differs from the reference.
nlohmann::json merge_report(const std::vector<RunMetrics>& runs, const std::string& reference = {});
/// CSV view of `merge_report`: run,state,top1,macro_f1,macro_recall[,delta_top1_pp].
std::string report_csv(const std::vector<RunMetrics>& runs, const std::string& reference = {});

/// Writes text to `path`, throwing std::runtime_error if it cannot.
void write_text(const std::filesystem::path& path, const std::string& text);
RunMetrics read_metrics(const std::filesystem::path& path);

}  // namespace inornet
