#include "relaxkv/attention.hpp"

#include "relaxkv/errors.hpp"

namespace relaxkv {

namespace {

// Rotates each head's slice of a F x d block to temporal index `position`.
void rotate_heads(MatrixXr& block, Index first_row, Index rows, Index position, const ModelParams& model)
{
    const Index hd = model.shape.head_dim;
    for (Index h = 0; h < model.shape.heads; ++h) {
        rotate_rows_inplace(block.block(first_row, h * hd, rows, hd), position, model.rotary);
    }
}

}  // namespace

MatrixXr rms_normalize_rows(const MatrixXr& x)
{
    MatrixXr out(x.rows(), x.cols());
    for (Index r = 0; r < x.rows(); ++r) {
        const double ms = x.row(r).squaredNorm() / static_cast<double>(x.cols());
        out.row(r) = x.row(r) / std::sqrt(ms + 1e-12);
    }
    return out;
}

CostReport count_step_cost(Index memory_frames, Index chunk_size, Index tokens_per_frame, const ModelShape& shape)
{
    CostReport c;
    c.attended_frames = memory_frames + chunk_size;
    c.key_tokens = c.attended_frames * tokens_per_frame;
    c.score_ops = static_cast<std::int64_t>(shape.layers) * shape.heads * (chunk_size * tokens_per_frame) *
                  c.key_tokens;
    return c;
}

ChunkResult attend_chunk(std::span<const LatentFrame> chunk, const StructuredMemory& mem,
                         const PositionPlan& plan, const KVCache& cache, const ModelParams& model)
{
    const Index F = model.tokens();
    const Index d = model.dim();
    const Index U = static_cast<Index>(chunk.size());
    const Index hd = model.shape.head_dim;
    if (U == 0) {
        throw ContractError("attend_chunk needs at least one query frame");
    }
    if (static_cast<Index>(plan.current_chunk_positions.size()) != U) {
        throw ContractError("position plan covers " + std::to_string(plan.current_chunk_positions.size()) +
                            " chunk frames, chunk has " + std::to_string(U));
    }

    const auto mem_ids = mem.all_ids();
    std::vector<const Frame*> mem_frames;
    std::vector<Index> mem_positions;
    for (FrameId id : mem_ids) {
        if (!plan.covers(id)) {
            throw ContractError("position plan has no entry for memory frame " + std::to_string(id));
        }
        mem_positions.push_back(plan.position_of(id));
        const Frame& f = cache.frame(id);
        if (f.layers() != model.shape.layers || f.tokens() != F || f.dim() != d) {
            throw ContractError("cached frame " + std::to_string(id) + " does not match the model shape");
        }
        mem_frames.push_back(&f);
    }
    const Index M = static_cast<Index>(mem_frames.size());

    MatrixXr x(U * F, d);
    for (Index u = 0; u < U; ++u) {
        const auto& lf = chunk[static_cast<std::size_t>(u)];
        if (lf.latent.rows() != F || lf.latent.cols() != d) {
            throw ContractError("chunk frame " + std::to_string(lf.id) + " latent has the wrong shape");
        }
        x.middleRows(u * F, F) = lf.latent;
    }

    ChunkResult result;
    result.frames.resize(static_cast<std::size_t>(U));
    for (Index u = 0; u < U; ++u) {
        result.frames[static_cast<std::size_t>(u)].id = chunk[static_cast<std::size_t>(u)].id;
    }

    const Index key_rows = (M + U) * F;
    for (Index l = 0; l < model.shape.layers; ++l) {
        const auto& w = model.layers[static_cast<std::size_t>(l)];
        MatrixXr q = x * w.wq;
        const MatrixXr kc = x * w.wk;
        const MatrixXr vc = x * w.wv;

        for (Index u = 0; u < U; ++u) {
            auto& f = result.frames[static_cast<std::size_t>(u)];
            f.keys.push_back(kc.middleRows(u * F, F));
            f.values.push_back(vc.middleRows(u * F, F));
        }

        MatrixXr keys(key_rows, d);
        MatrixXr values(key_rows, d);
        for (Index m = 0; m < M; ++m) {
            keys.middleRows(m * F, F) = mem_frames[static_cast<std::size_t>(m)]->keys[static_cast<std::size_t>(l)];
            values.middleRows(m * F, F) =
                mem_frames[static_cast<std::size_t>(m)]->values[static_cast<std::size_t>(l)];
            rotate_heads(keys, m * F, F, mem_positions[static_cast<std::size_t>(m)], model);
        }
        keys.bottomRows(U * F) = kc;
        values.bottomRows(U * F) = vc;
        for (Index u = 0; u < U; ++u) {
            const Index pos = plan.current_chunk_positions[static_cast<std::size_t>(u)];
            rotate_heads(keys, (M + u) * F, F, pos, model);
            rotate_heads(q, u * F, F, pos, model);
        }

        MatrixXr heads_out(U * F, d);
        for (Index h = 0; h < model.shape.heads; ++h) {
            heads_out.middleCols(h * hd, hd) = scaled_dot_product_attention(
                q.middleCols(h * hd, hd), keys.middleCols(h * hd, hd), values.middleCols(h * hd, hd));
            result.counted_score_ops += static_cast<std::int64_t>(q.rows()) * keys.rows();
        }
        x = rms_normalize_rows(x + heads_out * w.wo);
    }

    result.outputs.reserve(static_cast<std::size_t>(U));
    for (Index u = 0; u < U; ++u) {
        result.outputs.emplace_back(x.middleRows(u * F, F));
    }
    result.cost = count_step_cost(M, U, F, model.shape);
    return result;
}

}  // namespace relaxkv
