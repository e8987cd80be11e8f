#include "relaxkv/report.hpp"

#include "relaxkv/errors.hpp"

#include <algorithm>
#include <sstream>

namespace relaxkv {

namespace {

std::string join_ids(const std::vector<FrameId>& ids)
{
    std::string out;
    for (FrameId id : ids) {
        out += out.empty() ? std::to_string(id) : ";" + std::to_string(id);
    }
    return out;
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

nlohmann::json cost_json(const CostReport& c)
{
    return {{"attended_frames", c.attended_frames}, {"key_tokens", c.key_tokens}, {"score_ops", c.score_ops}};
}

}  // namespace

TraceSummary summarize(const RolloutTrace& trace, Index clip_chunks)
{
    const auto& cfg = trace.config;
    const Index U = cfg.memory.chunk_size;
    TraceSummary s;

    const auto features = trace.frame_features();
    const ClipFeatures clips = make_clips(features, clip_chunks * U);
    if (clips.clips.size() >= 2) {
        s.drift = drift(clips);
        s.repetition = repetition(clips);
    }

    std::int64_t total_ops = 0;
    double attended = 0.0;
    for (const auto& step : trace.steps) {
        if (step.cost.score_ops > s.peak.score_ops) {
            s.peak = step.cost;
        }
        total_ops += step.cost.score_ops;
        attended += static_cast<double>(step.cost.attended_frames);
    }
    if (!trace.steps.empty()) {
        s.mean_attended_frames = attended / static_cast<double>(trace.steps.size());
    }
    s.baseline = count_step_cost(cfg.memory.window_size - U, U, cfg.model.tokens_per_frame, cfg.model);
    s.cost_ratio = cost_ratio(s.baseline, s.peak);

    RolloutConfig dense = cfg;
    dense.memory.policy = Policy::dense_window;
    std::int64_t dense_ops = 0;
    for (const auto& c : profile_costs(dense)) {
        dense_ops += c.score_ops;
    }
    s.total_cost_ratio = static_cast<double>(dense_ops) / static_cast<double>(total_ops);
    return s;
}

std::string CsvTable::render(const std::string& kind,
                             const std::vector<std::pair<std::string, std::string>>& config) const
{
    std::ostringstream os;
    os << "# schema_version=" << kReportSchemaVersion << "\n";
    os << "# kind=" << kind << "\n";
    for (const auto& [k, v] : config) {
        os << "# config " << k << "=" << v << "\n";
    }
    auto write_row = [&os](const std::vector<std::string>& cells) {
        for (std::size_t n = 0; n < cells.size(); ++n) {
            const auto& c = cells[n];
            if (n > 0) {
                os << ',';
            }
            if (c.find_first_of(",\"\n") != std::string::npos) {
                os << '"';
                for (char ch : c) {
                    os << (ch == '"' ? "\"\"" : std::string(1, ch));
                }
                os << '"';
            } else {
                os << c;
            }
        }
        os << "\n";
    };
    write_row(columns);
    for (const auto& r : rows) {
        write_row(r);
    }
    return os.str();
}

nlohmann::json config_json(const std::vector<std::pair<std::string, std::string>>& config)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : config) {
        j[k] = v;
    }
    return j;
}

nlohmann::json trace_json(const RolloutTrace& trace, const TraceSummary& summary)
{
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : trace.steps) {
        nlohmann::json scores = nlohmann::json::array();
        for (const auto& sc : s.scores) {
            scores.push_back({{"frame", sc.frame_id},
                              {"stability", sc.stability},
                              {"redundancy", sc.redundancy},
                              {"relaxation", sc.relaxation}});
        }
        nlohmann::json positions = nlohmann::json::array();
        for (const auto& [id, pos] : s.plan.assignments) {
            positions.push_back({id, pos});
        }
        steps.push_back({
            {"step", s.step},
            {"first_frame", s.first_frame},
            {"warmup", s.warmup},
            {"chunk", s.chunk_ids},
            {"candidates", s.candidate_ids},
            {"pool", s.pool_ids},
            {"sink", s.memory.sink_ids},
            {"history", s.memory.history_ids},
            {"tail", s.memory.tail_ids},
            {"scores", scores},
            {"positions", positions},
            {"chunk_positions", s.plan.current_chunk_positions},
            {"cost", cost_json(s.cost)},
            {"cached_frames", s.cached_frames},
        });
    }
    return {
        {"summary",
         {{"steps", trace.steps.size()},
          {"frames", trace.config.total_frames},
          {"drift", opt_json(summary.drift)},
          {"repetition", opt_json(summary.repetition)},
          {"mean_attended_frames", summary.mean_attended_frames},
          {"peak_cost", cost_json(summary.peak)},
          {"baseline_cost", cost_json(summary.baseline)},
          {"cost_ratio", summary.cost_ratio},
          {"total_cost_ratio", summary.total_cost_ratio}}},
        {"steps", steps},
    };
}

CsvTable trace_table(const RolloutTrace& trace)
{
    CsvTable t;
    t.columns = {"step", "first_frame", "warmup", "sink", "history", "tail", "pool",
                 "attended_frames", "key_tokens", "score_ops", "cached_frames"};
    for (const auto& s : trace.steps) {
        t.rows.push_back({std::to_string(s.step), std::to_string(s.first_frame), s.warmup ? "1" : "0",
                          join_ids(s.memory.sink_ids), join_ids(s.memory.history_ids), join_ids(s.memory.tail_ids),
                          join_ids(s.pool_ids), std::to_string(s.cost.attended_frames),
                          std::to_string(s.cost.key_tokens), std::to_string(s.cost.score_ops),
                          std::to_string(s.cached_frames)});
    }
    return t;
}

void assign_balance(std::vector<MethodRow>& rows)
{
    std::vector<std::size_t> idx;
    std::vector<double> drifts;
    std::vector<double> reps;
    for (std::size_t n = 0; n < rows.size(); ++n) {
        const auto& s = rows[n].summary;
        if (s && s->drift && s->repetition) {
            idx.push_back(n);
            drifts.push_back(*s->drift);
            reps.push_back(*s->repetition);
        }
    }
    if (idx.size() < 2) {
        return;
    }
    const auto b = balance(drifts, reps);
    for (std::size_t n = 0; n < idx.size(); ++n) {
        rows[idx[n]].balance = b[n];
    }
}

CsvTable method_table(const std::vector<MethodRow>& rows)
{
    CsvTable t;
    t.columns = {"policy",      "selector",       "n_sink",     "n_history",   "n_tail",
                 "pool_size",   "lambda",         "history_position", "window_size", "total_frames",
                 "seed",        "status",         "drift",      "repetition",  "balance",
                 "peak_attended_frames", "mean_attended_frames", "peak_score_ops", "cost_ratio",
                 "total_cost_ratio", "error"};
    for (const auto& r : rows) {
        const auto& m = r.config.memory;
        std::vector<std::string> row{std::string(to_string(m.policy)),
                                     std::string(to_string(m.selector)),
                                     std::to_string(m.n_sink),
                                     std::to_string(m.n_history),
                                     std::to_string(m.n_tail),
                                     std::to_string(m.pool_size),
                                     format_double(m.lambda),
                                     std::to_string(m.history_position),
                                     std::to_string(m.window_size),
                                     std::to_string(r.config.total_frames),
                                     std::to_string(r.config.seed),
                                     r.summary ? "ok" : "error"};
        if (r.summary) {
            const auto& s = *r.summary;
            row.insert(row.end(), {opt_double(s.drift), opt_double(s.repetition), opt_double(r.balance),
                                   std::to_string(s.peak.attended_frames), format_double(s.mean_attended_frames),
                                   std::to_string(s.peak.score_ops), format_double(s.cost_ratio),
                                   format_double(s.total_cost_ratio), ""});
        } else {
            row.insert(row.end(), {"", "", "", "", "", "", "", "", r.error});
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

nlohmann::json method_json(const std::vector<MethodRow>& rows)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
        const auto& m = r.config.memory;
        nlohmann::json j{
            {"policy", to_string(m.policy)},
            {"selector", to_string(m.selector)},
            {"n_sink", m.n_sink},
            {"n_history", m.n_history},
            {"n_tail", m.n_tail},
            {"pool_size", m.pool_size},
            {"lambda", m.lambda},
            {"history_position", m.history_position},
            {"window_size", m.window_size},
            {"total_frames", r.config.total_frames},
            {"seed", r.config.seed},
        };
        if (r.summary) {
            const auto& s = *r.summary;
            j["status"] = "ok";
            j["drift"] = opt_json(s.drift);
            j["repetition"] = opt_json(s.repetition);
            j["balance"] = opt_json(r.balance);
            j["peak_cost"] = cost_json(s.peak);
            j["mean_attended_frames"] = s.mean_attended_frames;
            j["cost_ratio"] = s.cost_ratio;
            j["total_cost_ratio"] = s.total_cost_ratio;
        } else {
            j["status"] = "error";
            j["error"] = r.error;
        }
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace relaxkv
