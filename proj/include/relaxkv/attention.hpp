#pragma once

#include "relaxkv/kv_cache.hpp"
#include "relaxkv/model.hpp"
#include "relaxkv/rope.hpp"
#include "relaxkv/types.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace relaxkv {

struct CostReport {
    Index attended_frames = 0;
    Index key_tokens = 0;
    std::int64_t score_ops = 0;  // query tokens x key tokens, summed over layers and heads

    friend bool operator==(const CostReport&, const CostReport&) = default;
};

/// softmax(Q K^T / sqrt(head_dim)) V with a max-subtracted softmax per row.
template <typename DQ, typename DK, typename DV>
RowMatrix<typename DQ::Scalar> scaled_dot_product_attention(const Eigen::MatrixBase<DQ>& q,
                                                            const Eigen::MatrixBase<DK>& k,
                                                            const Eigen::MatrixBase<DV>& v)
{
    using Scalar = typename DQ::Scalar;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(q.cols()));
    RowMatrix<Scalar> logits = (q * k.transpose()) * scale;
    for (Index r = 0; r < logits.rows(); ++r) {
        auto row = logits.row(r);
        row = (row.array() - row.maxCoeff()).exp().matrix();
        row /= row.sum();
    }
    return logits * v;
}

struct ChunkResult {
    std::vector<Frame> frames;       // per-layer keys/values of the chunk, ready to cache
    std::vector<MatrixXr> outputs;   // final-layer latent per chunk frame, F x d
    CostReport cost;
    std::int64_t counted_score_ops = 0;  // tallied while computing logits
};

/// Runs the toy attention stack over one chunk.
///
/// At every layer the chunk's queries attend to the cached keys of every
/// frame in `mem` (rotated by `plan`) and to all keys of the chunk itself;
/// attention is bidirectional inside the chunk. Throws CacheMissError for a
/// memory frame missing from `cache` and ContractError when `plan` does not
/// cover `mem` or the chunk.
ChunkResult attend_chunk(std::span<const LatentFrame> chunk, const StructuredMemory& mem,
                         const PositionPlan& plan, const KVCache& cache, const ModelParams& model);

CostReport count_step_cost(Index memory_frames, Index chunk_size, Index tokens_per_frame, const ModelShape& shape);

inline CostReport count_step_cost(const StructuredMemory& mem, Index chunk_size, Index tokens_per_frame,
                                  const ModelShape& shape)
{
    return count_step_cost(mem.size(), chunk_size, tokens_per_frame, shape);
}

/// Row-wise RMS normalization used between layers.
MatrixXr rms_normalize_rows(const MatrixXr& x);

}  // namespace relaxkv
