#pragma once

#include "relaxkv/types.hpp"

#include <map>
#include <span>
#include <vector>

namespace relaxkv {

enum class CacheRole { sink, candidate, tail };

/// Role-tagged store of per-layer keys and values, keyed by frame id. A frame
/// is inserted for all layers at once, so every layer always holds the same
/// set of ids.
class KVCache {
public:
    struct Entry {
        Frame frame;
        CacheRole role = CacheRole::tail;
    };

    void insert(Frame frame, CacheRole role = CacheRole::tail);
    void erase(FrameId id);
    void set_role(FrameId id, CacheRole role);

    bool contains(FrameId id) const { return m_entries.count(id) != 0; }
    /// Throws CacheMissError when `id` is absent.
    const Entry& at(FrameId id) const;
    const Frame& frame(FrameId id) const { return at(id).frame; }

    std::vector<FrameId> ids() const;
    Index size() const { return static_cast<Index>(m_entries.size()); }
    bool empty() const { return m_entries.empty(); }

private:
    std::map<FrameId, Entry> m_entries;
};

/// Frames a future step of `cfg.policy` can still attend to, once
/// `generated_count` frames exist. Frames outside this set are safe to evict.
std::vector<FrameId> retained_ids(const MemoryConfig& cfg, Index generated_count);

/// Number of candidate-region frames kept under cfg.retention after
/// `generated_count` frames.
Index retained_candidate_bound(const MemoryConfig& cfg, Index generated_count);

/// Inserts `new_frames`, evicts every frame outside retained_ids(cfg,
/// generated_count) and refreshes role tags from the current partition.
void append_and_evict(KVCache& cache, std::vector<Frame> new_frames, const MemoryConfig& cfg,
                      Index generated_count);

}  // namespace relaxkv
