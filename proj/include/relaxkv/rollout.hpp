#pragma once

#include "relaxkv/attention.hpp"
#include "relaxkv/memory_core.hpp"
#include "relaxkv/model.hpp"
#include "relaxkv/rope.hpp"
#include "relaxkv/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace relaxkv {

struct RolloutConfig {
    MemoryConfig memory;
    ModelShape model;
    Index total_frames = 60;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Everything decided and measured while generating one chunk.
struct StepRecord {
    Index step = 0;
    Index first_frame = 0;  // generation index i of the chunk's first frame
    bool warmup = false;
    std::vector<FrameId> chunk_ids;
    std::vector<FrameId> candidate_ids;  // candidate region of this step (partition policies only)
    std::vector<FrameId> pool_ids;
    StructuredMemory memory;
    std::vector<ScoredCandidate> scores;
    PositionPlan plan;
    CostReport cost;
    std::int64_t counted_score_ops = 0;
    Index cached_frames = 0;  // cache size after this step's append/evict
    std::vector<Eigen::VectorXd> features;  // mean-pooled output latent per chunk frame
};

struct RolloutTrace {
    RolloutConfig config;
    std::vector<StepRecord> steps;

    /// Per-frame features in frame order.
    std::vector<Eigen::VectorXd> frame_features() const;
};

/// Generates cfg.total_frames frames chunk by chunk under cfg.memory.policy.
///
/// Policies:
///  - relaxed: partition, second-half restriction, evenly spaced pool, then
///    History by cfg.memory.selector; hybrid rotary positions.
///  - dense_window: sliding window of window_size frames; when the next chunk
///    would overflow it, the window restarts from the previous window's final
///    chunk with positions reset to 0..U-1.
///  - attention_sink: Sink + Tail, no History.
///  - sink_only / tail_only: the first / last `budget` frames, where
///    budget = n_sink + n_history + n_tail.
///  - history_only: `budget` evenly spaced frames of the restricted region.
///  - full: every generated frame at absolute positions.
///  - none: no memory.
/// While a policy's roles cannot be populated yet it attends densely to all
/// existing frames at absolute positions (none excepted).
RolloutTrace run_rollout(const RolloutConfig& cfg);

/// Per-step cost of cfg's policy derived from memory sizes alone, with no
/// generation. Agrees with run_rollout's recorded costs.
std::vector<CostReport> profile_costs(const RolloutConfig& cfg);

/// First frame id of the dense sliding window used to generate the chunk
/// starting at `current_index`.
Index dense_window_start(Index current_index, Index chunk_size, Index window_size);

struct SweepOutcome {
    RolloutConfig config;
    std::optional<RolloutTrace> trace;
    std::string error;  // set when the rollout failed
};

/// Runs every config, in parallel where possible. Failures are recorded per
/// config. Output order matches `grid`. Throws ConfigError on an empty grid.
std::vector<SweepOutcome> run_sweep(const std::vector<RolloutConfig>& grid);

}  // namespace relaxkv
