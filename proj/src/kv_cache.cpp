#include "relaxkv/kv_cache.hpp"

#include "relaxkv/errors.hpp"
#include "relaxkv/memory_core.hpp"

#include <algorithm>

namespace relaxkv {

void KVCache::insert(Frame frame, CacheRole role)
{
    if (!m_entries.empty()) {
        const Frame& ref = m_entries.begin()->second.frame;
        if (frame.layers() != ref.layers() || frame.tokens() != ref.tokens() || frame.dim() != ref.dim()) {
            throw ContractError("frame " + std::to_string(frame.id) + " does not match the cache layout");
        }
    }
    if (frame.values.size() != frame.keys.size()) {
        throw ContractError("frame " + std::to_string(frame.id) + " has mismatched key/value layer counts");
    }
    const FrameId id = frame.id;
    m_entries.insert_or_assign(id, Entry{std::move(frame), role});
}

void KVCache::erase(FrameId id) { m_entries.erase(id); }

void KVCache::set_role(FrameId id, CacheRole role)
{
    auto it = m_entries.find(id);
    if (it == m_entries.end()) {
        throw CacheMissError("frame " + std::to_string(id) + " is not cached");
    }
    it->second.role = role;
}

const KVCache::Entry& KVCache::at(FrameId id) const
{
    auto it = m_entries.find(id);
    if (it == m_entries.end()) {
        throw CacheMissError("frame " + std::to_string(id) + " is not cached");
    }
    return it->second;
}

std::vector<FrameId> KVCache::ids() const
{
    std::vector<FrameId> out;
    out.reserve(m_entries.size());
    for (const auto& [id, entry] : m_entries) {
        out.push_back(id);
    }
    return out;
}

namespace {

void append_range(std::vector<FrameId>& out, FrameId first, FrameId last)
{
    for (FrameId id = std::max<FrameId>(first, 0); id < last; ++id) {
        out.push_back(id);
    }
}

std::vector<FrameId> retained_candidates(const MemoryConfig& cfg, Index generated_count)
{
    const Partition p = partition(generated_count, cfg);
    if (cfg.retention == Retention::reachable) {
        // Later restricted regions only move forward, so the next step's is the widest.
        return restrict_candidates(p);
    }
    return p.candidate_ids;
}

}  // namespace

Index retained_candidate_bound(const MemoryConfig& cfg, Index generated_count)
{
    switch (cfg.policy) {
        case Policy::relaxed:
        case Policy::history_only:
            return static_cast<Index>(retained_candidates(cfg, generated_count).size());
        default:
            return 0;
    }
}

std::vector<FrameId> retained_ids(const MemoryConfig& cfg, Index generated_count)
{
    const Index g = std::max<Index>(generated_count, 0);
    std::vector<FrameId> out;
    switch (cfg.policy) {
        case Policy::none:
            break;
        case Policy::full:
            append_range(out, 0, g);
            break;
        case Policy::dense_window:
            append_range(out, g - cfg.window_size, g);
            break;
        case Policy::sink_only:
            append_range(out, 0, std::min(cfg.budget(), g));
            break;
        case Policy::tail_only:
            append_range(out, g - cfg.budget(), g);
            break;
        case Policy::attention_sink:
            append_range(out, 0, std::min(cfg.n_sink, g));
            append_range(out, g - cfg.n_tail, g);
            break;
        case Policy::relaxed:
        case Policy::history_only: {
            append_range(out, 0, std::min(cfg.n_sink, g));
            const auto cand = retained_candidates(cfg, g);
            out.insert(out.end(), cand.begin(), cand.end());
            append_range(out, g - cfg.n_tail, g);
            break;
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void append_and_evict(KVCache& cache, std::vector<Frame> new_frames, const MemoryConfig& cfg,
                      Index generated_count)
{
    for (auto& f : new_frames) {
        cache.insert(std::move(f));
    }
    const auto keep = retained_ids(cfg, generated_count);
    for (FrameId id : cache.ids()) {
        if (!std::binary_search(keep.begin(), keep.end(), id)) {
            cache.erase(id);
        }
    }
    // Sink tags are permanent: during warmup the newest of the first n_sink
    // frames briefly serves as Tail but is already pinned as a sink here.
    for (FrameId id : cache.ids()) {
        CacheRole role = CacheRole::candidate;
        if (id < cfg.n_sink) {
            role = CacheRole::sink;
        } else if (id >= generated_count - cfg.n_tail) {
            role = CacheRole::tail;
        }
        cache.set_role(id, role);
    }
}

}  // namespace relaxkv
