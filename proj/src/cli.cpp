#include "relaxkv/cli.hpp"

#include "relaxkv/config.hpp"
#include "relaxkv/errors.hpp"
#include "relaxkv/report.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace relaxkv::cli {

namespace fs = std::filesystem;

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::optional<std::string> config;
    std::vector<std::string> overrides;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::string format;
};

void add_common(CLI::App* cmd, CommonOptions& o, const std::string& default_format)
{
    o.format = default_format;
    cmd->add_option("--config", o.config, "Config file (INI sections per module)");
    cmd->add_option("--set", o.overrides, "Override a config key, e.g. memory.lambda=0.5 (repeatable)");
    cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Run seed (required unless rollout.seed is set in the config)");
    cmd->add_option("--format", o.format, "Report format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
}

RunSettings settings_from(const CommonOptions& o)
{
    std::optional<fs::path> path;
    if (o.config) {
        path = fs::path(*o.config);
    }
    return load_settings(path, o.overrides, o.seed);
}

fs::path write_report(const CommonOptions& o, const std::string& stem, const std::string& contents)
{
    const fs::path dir(o.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    const fs::path file = dir / (stem + "." + o.format);
    std::ofstream os(file, std::ios::binary | std::ios::trunc);
    os << contents;
    if (!os) {
        throw IoError("cannot write " + file.string());
    }
    return file;
}

std::string json_report(const std::string& kind, const RunSettings& s, nlohmann::json body)
{
    nlohmann::json j{{"schema_version", kReportSchemaVersion}, {"kind", kind}, {"config", config_json(s.resolved())}};
    for (auto& [k, v] : body.items()) {
        j[k] = std::move(v);
    }
    return j.dump(2) + "\n";
}

std::vector<MethodRow> rows_from(const std::vector<SweepOutcome>& outcomes, Index clip_chunks)
{
    std::vector<MethodRow> rows;
    for (const auto& o : outcomes) {
        MethodRow r;
        r.config = o.config;
        r.error = o.error;
        if (o.trace) {
            try {
                r.summary = summarize(*o.trace, clip_chunks);
            } catch (const std::exception& e) {
                r.error = e.what();
            }
        }
        rows.push_back(std::move(r));
    }
    assign_balance(rows);
    return rows;
}

std::string method_report(const std::string& kind, const CommonOptions& o, const RunSettings& s,
                          const std::vector<MethodRow>& rows)
{
    if (o.format == "json") {
        return json_report(kind, s, {{"rows", method_json(rows)}});
    }
    return method_table(rows).render(kind, s.resolved());
}

fs::path cmd_rollout(const CommonOptions& o)
{
    const RunSettings s = settings_from(o);
    const RolloutTrace trace = run_rollout(s.rollout);
    const TraceSummary summary = summarize(trace, s.clip_chunks);
    if (o.format == "csv") {
        return write_report(o, "rollout", trace_table(trace).render("rollout", s.resolved()));
    }
    nlohmann::json body = trace_json(trace, summary);
    body["metrics"] = {{"drift", summary.drift ? nlohmann::json(*summary.drift) : nlohmann::json()},
                       {"repetition", summary.repetition ? nlohmann::json(*summary.repetition) : nlohmann::json()},
                       {"balance", nullptr},
                       {"cost_ratio", summary.cost_ratio}};
    return write_report(o, "rollout", json_report("rollout", s, std::move(body)));
}

fs::path cmd_sweep(const CommonOptions& o)
{
    const RunSettings s = settings_from(o);
    if (s.sweep.empty()) {
        throw ConfigError("sweep needs at least one axis ([sweep] section or --set sweep.<key>=v1,v2)");
    }
    const auto rows = rows_from(run_sweep(expand_grid(s)), s.clip_chunks);
    return write_report(o, "sweep", method_report("sweep", o, s, rows));
}

fs::path cmd_compare(const CommonOptions& o, const std::vector<std::string>& policy_args)
{
    RunSettings s = settings_from(o);
    if (!policy_args.empty()) {
        s.compare_policies.clear();
        for (const auto& p : policy_args) {
            s.compare_policies.push_back(parse_policy(p));
        }
    }
    if (s.compare_policies.size() < 2) {
        throw ConfigError("compare needs at least 2 policies (--policies a,b or compare.policies)");
    }
    std::vector<RolloutConfig> grid;
    for (Policy p : s.compare_policies) {
        RolloutConfig c = s.rollout;
        c.memory.policy = p;
        grid.push_back(c);
    }
    const auto rows = rows_from(run_sweep(grid), s.clip_chunks);
    return write_report(o, "compare", method_report("compare", o, s, rows));
}

fs::path cmd_profile(const CommonOptions& o)
{
    const RunSettings s = settings_from(o);
    const auto& cfg = s.rollout;
    RolloutConfig dense = cfg;
    dense.memory.policy = Policy::dense_window;
    const auto costs = profile_costs(cfg);
    const auto dense_costs = profile_costs(dense);
    const Index U = cfg.memory.chunk_size;
    const CostReport baseline = count_step_cost(cfg.memory.window_size - U, U, cfg.model.tokens_per_frame, cfg.model);
    CostReport peak;
    std::int64_t total = 0;
    std::int64_t dense_total = 0;
    for (std::size_t n = 0; n < costs.size(); ++n) {
        if (costs[n].score_ops > peak.score_ops) {
            peak = costs[n];
        }
        total += costs[n].score_ops;
        dense_total += dense_costs[n].score_ops;
    }
    const double ratio = cost_ratio(baseline, peak);
    const double total_ratio = static_cast<double>(dense_total) / static_cast<double>(total);

    if (o.format == "json") {
        nlohmann::json steps = nlohmann::json::array();
        for (std::size_t n = 0; n < costs.size(); ++n) {
            steps.push_back({{"step", n},
                             {"first_frame", static_cast<Index>(n) * U},
                             {"attended_frames", costs[n].attended_frames},
                             {"key_tokens", costs[n].key_tokens},
                             {"score_ops", costs[n].score_ops},
                             {"dense_window_attended_frames", dense_costs[n].attended_frames},
                             {"dense_window_score_ops", dense_costs[n].score_ops}});
        }
        nlohmann::json body{{"steps", steps},
                            {"summary",
                             {{"peak_attended_frames", peak.attended_frames},
                              {"peak_score_ops", peak.score_ops},
                              {"baseline_attended_frames", baseline.attended_frames},
                              {"baseline_score_ops", baseline.score_ops},
                              {"cost_ratio", ratio},
                              {"total_score_ops", total},
                              {"dense_window_total_score_ops", dense_total},
                              {"total_cost_ratio", total_ratio}}}};
        return write_report(o, "profile", json_report("profile", s, std::move(body)));
    }
    CsvTable t;
    t.columns = {"step", "first_frame", "attended_frames", "key_tokens", "score_ops",
                 "dense_window_attended_frames", "dense_window_score_ops"};
    for (std::size_t n = 0; n < costs.size(); ++n) {
        t.rows.push_back({std::to_string(n), std::to_string(static_cast<Index>(n) * U),
                          std::to_string(costs[n].attended_frames), std::to_string(costs[n].key_tokens),
                          std::to_string(costs[n].score_ops), std::to_string(dense_costs[n].attended_frames),
                          std::to_string(dense_costs[n].score_ops)});
    }
    t.rows.push_back({"peak", "", std::to_string(peak.attended_frames), std::to_string(peak.key_tokens),
                      std::to_string(peak.score_ops), std::to_string(baseline.attended_frames),
                      std::to_string(baseline.score_ops)});
    t.rows.push_back({"cost_ratio", "", "", "", format_double(ratio), "", format_double(total_ratio)});
    return write_report(o, "profile", t.render("profile", s.resolved()));
}

void report_error(std::ostream& err, const char* kind, const std::string& message)
{
    err << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Structured KV-memory rollout simulator"};
    app.require_subcommand(1);

    CommonOptions rollout_opts, sweep_opts, profile_opts, compare_opts;
    std::vector<std::string> policies;
    auto* rollout = app.add_subcommand("rollout", "Run one rollout and write its trace");
    add_common(rollout, rollout_opts, "json");
    auto* sweep = app.add_subcommand("sweep", "Run a grid of rollouts and write one row per grid point");
    add_common(sweep, sweep_opts, "csv");
    auto* profile = app.add_subcommand("profile", "Attention cost accounting only, no generation");
    add_common(profile, profile_opts, "csv");
    auto* compare = app.add_subcommand("compare", "Run several policies on identical seeds");
    add_common(compare, compare_opts, "csv");
    compare->add_option("--policies", policies, "Policies to compare (comma separated or repeated)")->delimiter(',');

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kExitOk;
        }
        report_error(err, "usage", e.what());
        return kExitConfig;
    }

    try {
        fs::path written;
        if (*rollout) {
            written = cmd_rollout(rollout_opts);
        } else if (*sweep) {
            written = cmd_sweep(sweep_opts);
        } else if (*profile) {
            written = cmd_profile(profile_opts);
        } else {
            written = cmd_compare(compare_opts, policies);
        }
        out << written.string() << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        report_error(err, "config", e.what());
        return kExitConfig;
    } catch (const IoError& e) {
        report_error(err, "io", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        report_error(err, "contract", e.what());
        return kExitContract;
    }
}

}  // namespace relaxkv::cli
