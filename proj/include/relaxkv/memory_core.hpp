#pragma once

#include "relaxkv/errors.hpp"
#include "relaxkv/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace relaxkv {

/// Which keys feed a prototype. Keys of dimension d are split into `heads`
/// blocks of d / heads and averaged together; `layer` restricts pooling to one
/// layer, otherwise every layer contributes equally.
struct KeyPooling {
    Index heads = 1;
    std::optional<Index> layer;
};

/// Splits the first `generated_count` frame ids into Sink, candidate region and Tail.
///
/// Once n_sink + n_tail frames exist the split is the plain index arithmetic:
/// the first n_sink ids, the last n_tail ids, everything in between. Before
/// that (warmup) the Tail is filled first with the most recent
/// min(n_tail, i) ids and the Sink takes what remains from the front; the
/// candidate region stays empty.
Partition partition(Index generated_count, const MemoryConfig& cfg);

/// Keeps the candidates whose position `idx` in the candidate region satisfies
/// 2 * idx >= |candidates|, i.e. the second half. Order is preserved.
std::vector<FrameId> restrict_candidates(const Partition& p);

/// Deterministic evenly spaced subsample of `restricted`. Position j of the
/// result is floor(j * (n - 1) / (pool_size - 1)); both endpoints are kept.
std::vector<FrameId> sample_pool(std::span<const FrameId> restricted, Index pool_size);

namespace detail {

template <typename Scalar>
Vector<Scalar> pooled_key_sum(const BasicFrame<Scalar>& frame, const KeyPooling& pooling, Index& count)
{
    if (frame.layers() == 0 || frame.tokens() < 1) {
        throw ContractError("frame " + std::to_string(frame.id) + " has no key tokens");
    }
    const Index d = frame.dim();
    if (pooling.heads < 1 || d % pooling.heads != 0) {
        throw ContractError("key dimension " + std::to_string(d) + " is not divisible by " +
                            std::to_string(pooling.heads) + " heads");
    }
    const Index head_dim = d / pooling.heads;

    Index first = 0;
    Index last = frame.layers();
    if (pooling.layer) {
        if (*pooling.layer < 0 || *pooling.layer >= frame.layers()) {
            throw ContractError("scoring layer " + std::to_string(*pooling.layer) + " out of range");
        }
        first = *pooling.layer;
        last = first + 1;
    }

    Vector<Scalar> token_sum = Vector<Scalar>::Zero(d);
    for (Index l = first; l < last; ++l) {
        token_sum += frame.keys[static_cast<std::size_t>(l)].colwise().sum().transpose();
    }
    // Column h of the reshaped view is head h's slice of the key.
    const Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> per_head(
        token_sum.data(), head_dim, pooling.heads);
    count += (last - first) * frame.tokens() * pooling.heads;
    return per_head.rowwise().sum();
}

template <typename Scalar>
BasicPrototype<Scalar> normalized_prototype(const Vector<Scalar>& mean, const std::string& what)
{
    const Scalar norm = mean.norm();
    if (!(norm >= Scalar(1e-12))) {
        throw DegeneratePrototypeError("degenerate prototype for " + what + ": mean key has zero norm");
    }
    return BasicPrototype<Scalar>{mean / norm};
}

}  // namespace detail

/// L2-normalized mean key of one frame.
template <typename Scalar>
BasicPrototype<Scalar> frame_prototype(const BasicFrame<Scalar>& frame, const KeyPooling& pooling = {})
{
    Index count = 0;
    Vector<Scalar> sum = detail::pooled_key_sum(frame, pooling, count);
    return detail::normalized_prototype<Scalar>(sum / static_cast<Scalar>(count),
                                                "frame " + std::to_string(frame.id));
}

/// L2-normalized mean over every token of every frame in the group.
template <typename Scalar>
BasicPrototype<Scalar> group_prototype(std::span<const BasicFrame<Scalar>* const> frames,
                                       const KeyPooling& pooling = {})
{
    if (frames.empty()) {
        throw EmptyGroupError("cannot build a prototype of an empty frame group");
    }
    Index count = 0;
    Vector<Scalar> sum = detail::pooled_key_sum(*frames.front(), pooling, count);
    for (std::size_t n = 1; n < frames.size(); ++n) {
        if (frames[n]->dim() != frames.front()->dim()) {
            throw ContractError("frames in a prototype group have different key dimensions");
        }
        sum += detail::pooled_key_sum(*frames[n], pooling, count);
    }
    return detail::normalized_prototype<Scalar>(sum / static_cast<Scalar>(count), "frame group");
}

template <typename Scalar>
BasicPrototype<Scalar> group_prototype(std::span<const BasicFrame<Scalar>> frames, const KeyPooling& pooling = {})
{
    std::vector<const BasicFrame<Scalar>*> ptrs;
    ptrs.reserve(frames.size());
    for (const auto& f : frames) {
        ptrs.push_back(&f);
    }
    return group_prototype<Scalar>(std::span<const BasicFrame<Scalar>* const>(ptrs), pooling);
}

/// Stability against the Sink prototype, redundancy against the Tail
/// prototype, and relaxation = stability - lambda * redundancy.
template <typename Scalar>
ScoredCandidate score_candidate(FrameId id, const BasicPrototype<Scalar>& candidate,
                                const BasicPrototype<Scalar>& sink, const BasicPrototype<Scalar>& tail,
                                double lambda)
{
    ScoredCandidate s;
    s.frame_id = id;
    s.stability = static_cast<double>(candidate.vec.dot(sink.vec));
    s.redundancy = static_cast<double>(candidate.vec.dot(tail.vec));
    s.relaxation = s.stability - lambda * s.redundancy;
    return s;
}

/// Top-k by relaxation score. Equal scores go to the larger (more recent)
/// frame id. The result is sorted ascending by frame id.
std::vector<FrameId> select_history(std::span<const ScoredCandidate> scored, Index k);

/// Assembles Sink + History + Tail. Every history id must lie in the
/// restricted (second-half) candidate region of `p`.
StructuredMemory build_memory(const Partition& p, std::span<const FrameId> history_ids);

}  // namespace relaxkv
