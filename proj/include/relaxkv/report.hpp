#pragma once

#include "relaxkv/config.hpp"
#include "relaxkv/metrics.hpp"
#include "relaxkv/rollout.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace relaxkv {

inline constexpr int kReportSchemaVersion = 1;

/// Per-trace numbers shared by every report.
struct TraceSummary {
    std::optional<double> drift;
    std::optional<double> repetition;
    CostReport peak;         // step with the most score operations
    CostReport baseline;     // dense window at full capacity: window_size - U frames + the chunk
    double mean_attended_frames = 0.0;
    double cost_ratio = 0.0;        // baseline.score_ops / peak.score_ops
    double total_cost_ratio = 0.0;  // summed dense_window ops / summed ops, over the whole rollout
};

/// Drift and repetition need at least two clips of clip_chunks * U frames;
/// they are left empty otherwise.
TraceSummary summarize(const RolloutTrace& trace, Index clip_chunks);

/// Plain table with `#`-prefixed header lines carrying the schema version,
/// the report kind and the resolved config.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::string render(const std::string& kind, const std::vector<std::pair<std::string, std::string>>& config) const;
};

nlohmann::json config_json(const std::vector<std::pair<std::string, std::string>>& config);
nlohmann::json trace_json(const RolloutTrace& trace, const TraceSummary& summary);
CsvTable trace_table(const RolloutTrace& trace);

/// Columns shared by sweep and compare tables: config, metrics, cost.
struct MethodRow {
    RolloutConfig config;
    std::optional<TraceSummary> summary;
    std::optional<double> balance;
    std::string error;
};

/// Fills `balance` for every row whose drift and repetition are known, when
/// at least two such rows exist.
void assign_balance(std::vector<MethodRow>& rows);

CsvTable method_table(const std::vector<MethodRow>& rows);
nlohmann::json method_json(const std::vector<MethodRow>& rows);

}  // namespace relaxkv
