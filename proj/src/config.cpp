#include "relaxkv/config.hpp"

#include "relaxkv/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <map>

namespace relaxkv {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto end = comma == std::string_view::npos ? s.size() : comma;
        auto item = trim(s.substr(start, end - start));
        if (!item.empty()) {
            out.push_back(std::move(item));
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

Index parse_index(const std::string& key, const std::string& value)
{
    long long v = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("'" + key + "' expects an integer, got '" + value + "'");
    }
    return static_cast<Index>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value)
{
    std::uint64_t v = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("'" + key + "' expects a non-negative 64-bit integer, got '" + value + "'");
    }
    return v;
}

double parse_double(const std::string& key, const std::string& value)
{
    double v = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
    }
    return v;
}

const std::map<std::string, std::string>& sweep_aliases()
{
    static const std::map<std::string, std::string> aliases{
        {"sink", "memory.n_sink"},           {"history", "memory.n_history"},
        {"tail", "memory.n_tail"},           {"pool", "memory.pool_size"},
        {"lambda", "memory.lambda"},         {"position", "memory.history_position"},
        {"history_position", "memory.history_position"}, {"policy", "memory.policy"},
    };
    return aliases;
}

std::string canonical_axis_key(const std::string& key)
{
    const auto& aliases = sweep_aliases();
    if (auto it = aliases.find(key); it != aliases.end()) {
        return it->second;
    }
    return key;
}

void add_sweep_axis(RunSettings& s, const std::string& raw_key, const std::string& value)
{
    const std::string key = canonical_axis_key(raw_key);
    if (key.rfind("sweep.", 0) == 0 || key.rfind("compare.", 0) == 0 || key == "rollout.seed") {
        throw ConfigError("'" + raw_key + "' cannot be swept");
    }
    for (const auto& axis : s.sweep) {
        if (axis.key == key) {
            throw ConfigError("conflicting grid keys: '" + raw_key + "' varies " + key + " more than once");
        }
    }
    SweepAxis axis{key, split_list(value)};
    if (axis.values.empty()) {
        throw ConfigError("sweep axis '" + raw_key + "' has no values");
    }
    // Validate each value against a scratch copy so errors surface before any run.
    RunSettings scratch = s;
    for (const auto& v : axis.values) {
        apply_setting(scratch, key, v);
    }
    s.sweep.push_back(std::move(axis));
}

}  // namespace

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void apply_setting(RunSettings& s, const std::string& key, const std::string& raw_value)
{
    const std::string value = trim(raw_value);
    auto& m = s.rollout.memory;
    auto& md = s.rollout.model;

    if (key.rfind("sweep.", 0) == 0) {
        add_sweep_axis(s, key.substr(6), value);
    } else if (key == "compare.policies") {
        s.compare_policies.clear();
        for (const auto& name : split_list(value)) {
            s.compare_policies.push_back(parse_policy(name));
        }
    } else if (key == "memory.policy") {
        m.policy = parse_policy(value);
    } else if (key == "memory.n_sink") {
        m.n_sink = parse_index(key, value);
    } else if (key == "memory.n_history") {
        m.n_history = parse_index(key, value);
    } else if (key == "memory.n_tail") {
        m.n_tail = parse_index(key, value);
    } else if (key == "memory.pool_size") {
        m.pool_size = parse_index(key, value);
    } else if (key == "memory.lambda") {
        m.lambda = parse_double(key, value);
    } else if (key == "memory.chunk_size") {
        m.chunk_size = parse_index(key, value);
    } else if (key == "memory.window_size") {
        m.window_size = parse_index(key, value);
    } else if (key == "memory.selector") {
        m.selector = parse_history_selector(value);
    } else if (key == "memory.history_position") {
        m.history_position = parse_index(key, value);
    } else if (key == "memory.retention") {
        m.retention = parse_retention(value);
    } else if (key == "memory.scoring_layer") {
        if (value == "all") {
            m.scoring_layer.reset();
        } else {
            m.scoring_layer = parse_index(key, value);
        }
    } else if (key == "model.layers") {
        md.layers = parse_index(key, value);
    } else if (key == "model.heads") {
        md.heads = parse_index(key, value);
    } else if (key == "model.head_dim") {
        md.head_dim = parse_index(key, value);
    } else if (key == "model.tokens_per_frame") {
        md.tokens_per_frame = parse_index(key, value);
    } else if (key == "model.rope_base") {
        md.rope_base = parse_double(key, value);
    } else if (key == "rollout.total_frames") {
        s.rollout.total_frames = parse_index(key, value);
    } else if (key == "rollout.seed") {
        s.rollout.seed = parse_u64(key, value);
        s.seed_set = true;
    } else if (key == "metrics.clip_chunks") {
        s.clip_chunks = parse_index(key, value);
        if (s.clip_chunks < 1) {
            throw ConfigError("metrics.clip_chunks must be >= 1");
        }
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

RunSettings load_settings(const std::optional<std::filesystem::path>& config_file,
                          std::span<const std::string> overrides, std::optional<std::uint64_t> seed)
{
    RunSettings s;
    if (config_file) {
        boost::property_tree::ptree tree;
        try {
            boost::property_tree::read_ini(config_file->string(), tree);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError("cannot read config: " + std::string(e.what()));
        }
        for (const auto& [section, body] : tree) {
            if (body.empty()) {
                throw ConfigError("config key '" + section + "' must be inside a [section]");
            }
            for (const auto& [name, value] : body) {
                apply_setting(s, section + "." + name, value.get_value<std::string>());
            }
        }
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("override '" + o + "' is not of the form key=value");
        }
        apply_setting(s, trim(o.substr(0, eq)), o.substr(eq + 1));
    }
    if (seed) {
        s.rollout.seed = *seed;
        s.seed_set = true;
    }
    if (!s.seed_set) {
        throw ConfigError("a seed is required (rollout.seed in the config file or --seed)");
    }
    s.rollout.validate();
    return s;
}

std::vector<std::pair<std::string, std::string>> RunSettings::resolved() const
{
    const auto& m = rollout.memory;
    const auto& md = rollout.model;
    std::vector<std::pair<std::string, std::string>> kv{
        {"memory.policy", std::string(to_string(m.policy))},
        {"memory.n_sink", std::to_string(m.n_sink)},
        {"memory.n_history", std::to_string(m.n_history)},
        {"memory.n_tail", std::to_string(m.n_tail)},
        {"memory.pool_size", std::to_string(m.pool_size)},
        {"memory.lambda", format_double(m.lambda)},
        {"memory.chunk_size", std::to_string(m.chunk_size)},
        {"memory.window_size", std::to_string(m.window_size)},
        {"memory.selector", std::string(to_string(m.selector))},
        {"memory.history_position", std::to_string(m.history_position)},
        {"memory.retention", std::string(to_string(m.retention))},
        {"memory.scoring_layer", m.scoring_layer ? std::to_string(*m.scoring_layer) : "all"},
        {"model.layers", std::to_string(md.layers)},
        {"model.heads", std::to_string(md.heads)},
        {"model.head_dim", std::to_string(md.head_dim)},
        {"model.tokens_per_frame", std::to_string(md.tokens_per_frame)},
        {"model.rope_base", format_double(md.rope_base)},
        {"rollout.total_frames", std::to_string(rollout.total_frames)},
        {"rollout.seed", std::to_string(rollout.seed)},
        {"metrics.clip_chunks", std::to_string(clip_chunks)},
    };
    for (const auto& axis : sweep) {
        std::string joined;
        for (const auto& v : axis.values) {
            joined += joined.empty() ? v : "," + v;
        }
        kv.emplace_back("sweep." + axis.key, joined);
    }
    if (!compare_policies.empty()) {
        std::string joined;
        for (Policy p : compare_policies) {
            joined += (joined.empty() ? "" : ",") + std::string(to_string(p));
        }
        kv.emplace_back("compare.policies", joined);
    }
    return kv;
}

std::vector<RolloutConfig> expand_grid(const RunSettings& settings)
{
    std::vector<RunSettings> points{settings};
    for (const auto& axis : settings.sweep) {
        std::vector<RunSettings> next;
        for (const auto& base : points) {
            for (const auto& v : axis.values) {
                RunSettings p = base;
                apply_setting(p, axis.key, v);
                if (axis.key == "memory.history_position") {
                    p.rollout.memory.selector = HistorySelector::fixed_position;
                }
                next.push_back(std::move(p));
            }
        }
        points = std::move(next);
    }
    std::vector<RolloutConfig> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        out.push_back(p.rollout);
    }
    return out;
}

}  // namespace relaxkv
