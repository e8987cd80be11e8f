#include "relaxkv/rollout.hpp"

#include "relaxkv/errors.hpp"
#include "relaxkv/kv_cache.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <random>
#include <thread>

namespace relaxkv {

void RolloutConfig::validate() const
{
    memory.validate();
    model.validate();
    if (total_frames < 1) {
        throw ConfigError("rollout.total_frames must be >= 1");
    }
    if (total_frames % memory.chunk_size != 0) {
        throw ConfigError("rollout.total_frames (" + std::to_string(total_frames) +
                          ") must be a multiple of memory.chunk_size (" + std::to_string(memory.chunk_size) + ")");
    }
    if (memory.policy == Policy::dense_window && memory.window_size < 2 * memory.chunk_size) {
        throw ConfigError("dense_window needs memory.window_size >= 2 * memory.chunk_size");
    }
    if (memory.scoring_layer && *memory.scoring_layer >= model.layers) {
        throw ConfigError("memory.scoring_layer must be < model.layers");
    }
}

std::vector<Eigen::VectorXd> RolloutTrace::frame_features() const
{
    std::vector<Eigen::VectorXd> out;
    for (const auto& s : steps) {
        out.insert(out.end(), s.features.begin(), s.features.end());
    }
    return out;
}

Index dense_window_start(Index current_index, Index chunk_size, Index window_size)
{
    Index start = 0;
    Index filled = 0;
    for (Index c = 0; c <= current_index; c += chunk_size) {
        if (filled + chunk_size > window_size) {
            start = c - chunk_size;
            filled = chunk_size;
        }
        if (c == current_index) {
            break;
        }
        filled += chunk_size;
    }
    return start;
}

namespace {

std::vector<FrameId> id_range(FrameId first, FrameId last)
{
    std::vector<FrameId> ids(static_cast<std::size_t>(std::max<FrameId>(last - first, 0)));
    std::iota(ids.begin(), ids.end(), first);
    return ids;
}

MemoryConfig with_roles(const MemoryConfig& cfg, Index n_sink, Index n_tail)
{
    MemoryConfig c = cfg;
    c.n_sink = n_sink;
    c.n_tail = n_tail;
    return c;
}

// Memory, plan and bookkeeping for one step, before attention runs.
struct StepMemory {
    StructuredMemory memory;
    PositionPlan plan;
    std::vector<FrameId> candidate_ids;
    std::vector<FrameId> pool_ids;
    std::vector<ScoredCandidate> scores;
    bool warmup = false;
};

StructuredMemory dense_memory(Index i)
{
    StructuredMemory m;
    m.tail_ids = id_range(0, i);
    return m;
}

std::vector<FrameId> pick_fixed_position(const std::vector<FrameId>& restricted, Index position, Index k)
{
    const auto n = static_cast<Index>(restricted.size());
    const Index take = std::min(k, n);
    const Index start = std::min(position, n - take);
    return {restricted.begin() + start, restricted.begin() + start + take};
}

class MemoryBuilder {
public:
    explicit MemoryBuilder(const RolloutConfig& cfg) : m_cfg(cfg), m_mem(cfg.memory)
    {
        m_pooling.heads = cfg.model.heads;
        m_pooling.layer = cfg.memory.scoring_layer;
    }

    // With a null cache (profiling) selection runs on sizes only and never reads keys.
    StepMemory build(Index i, const KVCache* cache)
    {
        const Index U = m_mem.chunk_size;
        StepMemory s;
        switch (m_mem.policy) {
            case Policy::none:
                s.warmup = i == 0;
                break;
            case Policy::full:
                s.memory = dense_memory(i);
                s.warmup = i == 0;
                break;
            case Policy::dense_window: {
                const Index start = dense_window_start(i, U, m_mem.window_size);
                s.memory.tail_ids = id_range(start, i);
                std::vector<FrameId> chunk = id_range(i, i + U);
                if (s.memory.tail_ids.empty()) {
                    s.plan = window_positions(chunk, {}, U, m_mem.window_size);
                } else {
                    const auto& w = s.memory.tail_ids;
                    std::vector<FrameId> anchor(w.begin(), w.begin() + U);
                    std::vector<FrameId> rest(w.begin() + U, w.end());
                    rest.insert(rest.end(), chunk.begin(), chunk.end());
                    s.plan = window_positions(anchor, rest, U, m_mem.window_size);
                }
                s.warmup = i == 0;
                return s;
            }
            case Policy::sink_only: {
                const Partition p = partition(i, with_roles(m_mem, m_mem.budget(), 0));
                s.memory.sink_ids = p.sink_ids;
                s.warmup = i < m_mem.budget();
                break;
            }
            case Policy::tail_only: {
                const Partition p = partition(i, with_roles(m_mem, 0, m_mem.budget()));
                s.memory.tail_ids = p.tail_ids;
                s.warmup = i < m_mem.budget();
                break;
            }
            case Policy::attention_sink: {
                const Partition p = partition(i, m_mem);
                s.candidate_ids = p.candidate_ids;
                s.memory = build_memory(p, {});
                s.warmup = p.candidate_ids.empty();
                break;
            }
            case Policy::history_only: {
                const Partition p = partition(i, m_mem);
                s.candidate_ids = p.candidate_ids;
                if (p.candidate_ids.empty()) {
                    s.memory = dense_memory(i);
                    s.warmup = true;
                    break;
                }
                const auto restricted = restrict_candidates(p);
                s.pool_ids = sample_pool(restricted, m_mem.budget());
                s.memory.history_ids = s.pool_ids;
                break;
            }
            case Policy::relaxed: {
                const Partition p = partition(i, m_mem);
                s.candidate_ids = p.candidate_ids;
                s.warmup = p.candidate_ids.empty();
                const auto restricted = restrict_candidates(p);
                s.pool_ids = sample_pool(restricted, m_mem.pool_size);
                const auto history = select(i, p, restricted, s.pool_ids, cache, s.scores);
                s.memory = build_memory(p, history);
                break;
            }
        }
        s.plan = relaxed_positions(s.memory, i, U);
        return s;
    }

private:
    std::vector<FrameId> select(Index i, const Partition& p, const std::vector<FrameId>& restricted,
                                const std::vector<FrameId>& pool, const KVCache* cache,
                                std::vector<ScoredCandidate>& scores)
    {
        const Index k = m_mem.n_history;
        if (k == 0 || pool.empty()) {
            return {};
        }
        switch (m_mem.selector) {
            case HistorySelector::fixed_position:
                return pick_fixed_position(restricted, m_mem.history_position, k);
            case HistorySelector::random: {
                std::vector<FrameId> shuffled = pool;
                std::mt19937_64 rng(mix_seed(m_cfg.seed, static_cast<std::uint64_t>(i) + 0x52414e44ULL));
                std::shuffle(shuffled.begin(), shuffled.end(), rng);
                shuffled.resize(static_cast<std::size_t>(std::min<Index>(k, static_cast<Index>(shuffled.size()))));
                std::sort(shuffled.begin(), shuffled.end());
                return shuffled;
            }
            case HistorySelector::relaxation:
                break;
        }
        if (cache == nullptr) {
            // Sizes only: any min(k, |pool|) frames give the same cost.
            return {pool.end() - std::min<Index>(k, static_cast<Index>(pool.size())), pool.end()};
        }
        scores = score_pool(p, pool, *cache);
        return select_history(scores, k);
    }

    std::optional<Prototype> role_prototype(const std::vector<FrameId>& ids, const KVCache& cache) const
    {
        if (ids.empty()) {
            return std::nullopt;
        }
        std::vector<const Frame*> frames;
        for (FrameId id : ids) {
            frames.push_back(&cache.frame(id));
        }
        return group_prototype<double>(std::span<const Frame* const>(frames), m_pooling);
    }

    // An absent Sink (or Tail) contributes zero stability (or redundancy).
    std::vector<ScoredCandidate> score_pool(const Partition& p, const std::vector<FrameId>& pool,
                                            const KVCache& cache) const
    {
        const auto sink = role_prototype(p.sink_ids, cache);
        const auto tail = role_prototype(p.tail_ids, cache);
        std::vector<ScoredCandidate> out;
        for (FrameId id : pool) {
            const Prototype h = frame_prototype(cache.frame(id), m_pooling);
            if (sink && tail) {
                out.push_back(score_candidate(id, h, *sink, *tail, m_mem.lambda));
                continue;
            }
            ScoredCandidate sc;
            sc.frame_id = id;
            sc.stability = sink ? h.vec.dot(sink->vec) : 0.0;
            sc.redundancy = tail ? h.vec.dot(tail->vec) : 0.0;
            sc.relaxation = sc.stability - m_mem.lambda * sc.redundancy;
            out.push_back(sc);
        }
        return out;
    }

    const RolloutConfig& m_cfg;
    const MemoryConfig& m_mem;
    KeyPooling m_pooling;
};

}  // namespace

RolloutTrace run_rollout(const RolloutConfig& cfg)
{
    cfg.validate();
    const ModelParams model = ModelParams::make(cfg.model, cfg.seed);
    const Index U = cfg.memory.chunk_size;

    RolloutTrace trace;
    trace.config = cfg;
    KVCache cache;
    MemoryBuilder builder(cfg);

    for (Index i = 0, step = 0; i < cfg.total_frames; i += U, ++step) {
        StepMemory sm = builder.build(i, &cache);
        StepRecord rec;
        rec.step = step;
        rec.first_frame = i;
        rec.warmup = sm.warmup;
        rec.chunk_ids = id_range(i, i + U);

        const auto inputs = initial_chunk(model, rec.chunk_ids);
        ChunkResult out = attend_chunk(inputs, sm.memory, sm.plan, cache, model);
        for (const auto& latent : out.outputs) {
            rec.features.emplace_back(latent.colwise().mean().transpose());
        }
        append_and_evict(cache, std::move(out.frames), cfg.memory, i + U);

        rec.candidate_ids = std::move(sm.candidate_ids);
        rec.pool_ids = std::move(sm.pool_ids);
        rec.memory = std::move(sm.memory);
        rec.scores = std::move(sm.scores);
        rec.plan = std::move(sm.plan);
        rec.cost = out.cost;
        rec.counted_score_ops = out.counted_score_ops;
        rec.cached_frames = cache.size();
        trace.steps.push_back(std::move(rec));
    }
    return trace;
}

std::vector<CostReport> profile_costs(const RolloutConfig& cfg)
{
    cfg.validate();
    const Index U = cfg.memory.chunk_size;
    MemoryBuilder builder(cfg);
    std::vector<CostReport> out;
    for (Index i = 0; i < cfg.total_frames; i += U) {
        const StepMemory sm = builder.build(i, nullptr);
        out.push_back(count_step_cost(sm.memory, U, cfg.model.tokens_per_frame, cfg.model));
    }
    return out;
}

std::vector<SweepOutcome> run_sweep(const std::vector<RolloutConfig>& grid)
{
    if (grid.empty()) {
        throw ConfigError("sweep grid is empty");
    }
    std::vector<SweepOutcome> outcomes(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t n = next++; n < grid.size(); n = next++) {
            outcomes[n].config = grid[n];
            try {
                outcomes[n].trace = run_rollout(grid[n]);
            } catch (const std::exception& e) {
                outcomes[n].error = e.what();
            }
        }
    };
    const std::size_t threads =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, grid.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }
    return outcomes;
}

}  // namespace relaxkv
