#include "relaxkv/memory_core.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace relaxkv {

namespace {

constexpr std::array<std::pair<Policy, std::string_view>, 8> kPolicyNames{{
    {Policy::dense_window, "dense_window"},
    {Policy::attention_sink, "attention_sink"},
    {Policy::relaxed, "relaxed"},
    {Policy::none, "none"},
    {Policy::sink_only, "sink_only"},
    {Policy::tail_only, "tail_only"},
    {Policy::history_only, "history_only"},
    {Policy::full, "full"},
}};

constexpr std::array<std::pair<HistorySelector, std::string_view>, 3> kSelectorNames{{
    {HistorySelector::relaxation, "relaxation"},
    {HistorySelector::fixed_position, "fixed_position"},
    {HistorySelector::random, "random"},
}};

constexpr std::array<std::pair<Retention, std::string_view>, 2> kRetentionNames{{
    {Retention::full_candidates, "full_candidates"},
    {Retention::reachable, "reachable"},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table, Enum value)
{
    for (const auto& [e, name] : table) {
        if (e == value) {
            return name;
        }
    }
    return "unknown";
}

template <typename Enum, std::size_t N>
Enum parse_name(const std::array<std::pair<Enum, std::string_view>, N>& table, std::string_view name,
                const char* what)
{
    for (const auto& [e, n] : table) {
        if (n == name) {
            return e;
        }
    }
    std::string allowed;
    for (const auto& [e, n] : table) {
        allowed += allowed.empty() ? "" : ", ";
        allowed += n;
    }
    throw ConfigError("unknown " + std::string(what) + " '" + std::string(name) + "' (expected one of: " +
                      allowed + ")");
}

std::vector<FrameId> id_range(FrameId first, FrameId last)
{
    std::vector<FrameId> ids;
    for (FrameId id = first; id < last; ++id) {
        ids.push_back(id);
    }
    return ids;
}

}  // namespace

std::string_view to_string(Policy p) { return name_of(kPolicyNames, p); }
std::string_view to_string(HistorySelector s) { return name_of(kSelectorNames, s); }
std::string_view to_string(Retention r) { return name_of(kRetentionNames, r); }
Policy parse_policy(std::string_view name) { return parse_name(kPolicyNames, name, "policy"); }
HistorySelector parse_history_selector(std::string_view name)
{
    return parse_name(kSelectorNames, name, "history selector");
}
Retention parse_retention(std::string_view name) { return parse_name(kRetentionNames, name, "retention mode"); }

void MemoryConfig::validate() const
{
    if (n_sink < 0 || n_history < 0 || n_tail < 0) {
        throw ConfigError("memory.n_sink, memory.n_history and memory.n_tail must be >= 0");
    }
    if (pool_size < 1) {
        throw ConfigError("memory.pool_size must be >= 1");
    }
    if (pool_size < n_history) {
        throw ConfigError("memory.pool_size (" + std::to_string(pool_size) + ") must be >= memory.n_history (" +
                          std::to_string(n_history) + ")");
    }
    if (!(lambda >= 0.0)) {
        throw ConfigError("memory.lambda must be >= 0");
    }
    if (chunk_size < 1) {
        throw ConfigError("memory.chunk_size must be >= 1");
    }
    if (window_size < chunk_size) {
        throw ConfigError("memory.window_size must be >= memory.chunk_size");
    }
    if (history_position < 0) {
        throw ConfigError("memory.history_position must be >= 0");
    }
    if (scoring_layer && *scoring_layer < 0) {
        throw ConfigError("memory.scoring_layer must be >= 0");
    }
}

std::vector<FrameId> StructuredMemory::all_ids() const
{
    std::vector<FrameId> ids;
    ids.reserve(static_cast<std::size_t>(size()));
    ids.insert(ids.end(), sink_ids.begin(), sink_ids.end());
    ids.insert(ids.end(), history_ids.begin(), history_ids.end());
    ids.insert(ids.end(), tail_ids.begin(), tail_ids.end());
    return ids;
}

Partition partition(Index generated_count, const MemoryConfig& cfg)
{
    const Index i = std::max<Index>(generated_count, 0);
    const Index n_tail = std::min(std::max<Index>(cfg.n_tail, 0), i);
    const Index n_sink = std::min(std::max<Index>(cfg.n_sink, 0), i - n_tail);

    Partition p;
    p.sink_ids = id_range(0, n_sink);
    p.candidate_ids = id_range(n_sink, i - n_tail);
    p.tail_ids = id_range(i - n_tail, i);
    return p;
}

std::vector<FrameId> restrict_candidates(const Partition& p)
{
    const auto n = p.candidate_ids.size();
    std::vector<FrameId> out;
    for (std::size_t idx = 0; idx < n; ++idx) {
        if (2 * idx >= n) {
            out.push_back(p.candidate_ids[idx]);
        }
    }
    return out;
}

std::vector<FrameId> sample_pool(std::span<const FrameId> restricted, Index pool_size)
{
    if (pool_size < 1) {
        throw ContractError("pool size must be >= 1");
    }
    const auto n = static_cast<Index>(restricted.size());
    if (n <= pool_size) {
        return {restricted.begin(), restricted.end()};
    }
    if (pool_size == 1) {
        // Spacing is undefined for a single slot; keep the most recent frame.
        return {restricted.back()};
    }
    std::vector<FrameId> out;
    out.reserve(static_cast<std::size_t>(pool_size));
    for (Index j = 0; j < pool_size; ++j) {
        const Index pos = j * (n - 1) / (pool_size - 1);
        out.push_back(restricted[static_cast<std::size_t>(pos)]);
    }
    return out;
}

std::vector<FrameId> select_history(std::span<const ScoredCandidate> scored, Index k)
{
    std::vector<ScoredCandidate> ranked(scored.begin(), scored.end());
    std::sort(ranked.begin(), ranked.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.relaxation != b.relaxation) {
            return a.relaxation > b.relaxation;
        }
        return a.frame_id > b.frame_id;
    });
    const auto take = static_cast<std::size_t>(std::clamp<Index>(k, 0, static_cast<Index>(ranked.size())));
    std::vector<FrameId> ids;
    ids.reserve(take);
    for (std::size_t n = 0; n < take; ++n) {
        ids.push_back(ranked[n].frame_id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

StructuredMemory build_memory(const Partition& p, std::span<const FrameId> history_ids)
{
    const auto restricted = restrict_candidates(p);
    std::vector<FrameId> history(history_ids.begin(), history_ids.end());
    std::sort(history.begin(), history.end());
    if (std::adjacent_find(history.begin(), history.end()) != history.end()) {
        throw ContractError("history ids contain duplicates");
    }
    for (FrameId id : history) {
        if (!std::binary_search(restricted.begin(), restricted.end(), id)) {
            throw ContractError("history frame " + std::to_string(id) +
                                " lies outside the second half of the candidate region");
        }
    }
    StructuredMemory mem;
    mem.sink_ids = p.sink_ids;
    mem.history_ids = std::move(history);
    mem.tail_ids = p.tail_ids;
    return mem;
}

}  // namespace relaxkv
