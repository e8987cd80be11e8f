#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace relaxkv {

using Index = Eigen::Index;
using FrameId = Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXr = RowMatrix<double>;

/// One generated latent frame: F token keys and values per attention layer.
/// Keys are stored before any rotary rotation; positions are assigned per step.
template <typename Scalar>
struct BasicFrame {
    using Matrix = RowMatrix<Scalar>;

    FrameId id = 0;
    std::vector<Matrix> keys;    // [layer] -> F x d
    std::vector<Matrix> values;  // [layer] -> F x d

    Index layers() const { return static_cast<Index>(keys.size()); }
    Index tokens() const { return keys.empty() ? 0 : keys.front().rows(); }
    Index dim() const { return keys.empty() ? 0 : keys.front().cols(); }
};

using Frame = BasicFrame<double>;

enum class Policy {
    dense_window,
    attention_sink,
    relaxed,
    none,
    sink_only,
    tail_only,
    history_only,
    full,
};

/// How the relaxed policy picks History from the candidate pool.
enum class HistorySelector {
    relaxation,      // Top-K on the relaxation score
    fixed_position,  // frame at a fixed index of the restricted region
    random,          // uniform over the pool, seeded per step
};

/// Which candidate frames the KV cache keeps once they leave the Tail.
enum class Retention {
    full_candidates,  // the whole candidate region
    reachable,        // only frames a future restricted region can still contain
};

std::string_view to_string(Policy p);
std::string_view to_string(HistorySelector s);
std::string_view to_string(Retention r);
Policy parse_policy(std::string_view name);
HistorySelector parse_history_selector(std::string_view name);
Retention parse_retention(std::string_view name);

struct MemoryConfig {
    Index n_sink = 2;
    Index n_history = 1;
    Index n_tail = 1;
    Index pool_size = 4;
    double lambda = 2.0;
    Index chunk_size = 3;
    Index window_size = 21;
    Policy policy = Policy::relaxed;
    HistorySelector selector = HistorySelector::relaxation;
    Index history_position = 0;
    Retention retention = Retention::full_candidates;
    std::optional<Index> scoring_layer;  // unset: pool keys over all layers

    Index budget() const { return n_sink + n_history + n_tail; }

    /// Throws ConfigError on any violated field constraint.
    void validate() const;
};

struct Partition {
    std::vector<FrameId> sink_ids;
    std::vector<FrameId> candidate_ids;
    std::vector<FrameId> tail_ids;
};

/// Unit-norm key direction of a frame or a group of frames.
template <typename Scalar>
struct BasicPrototype {
    Vector<Scalar> vec;
};

using Prototype = BasicPrototype<double>;

struct ScoredCandidate {
    FrameId frame_id = 0;
    double stability = 0.0;
    double redundancy = 0.0;
    double relaxation = 0.0;
};

/// Conditioning set for one generation step, split by role.
struct StructuredMemory {
    std::vector<FrameId> sink_ids;
    std::vector<FrameId> history_ids;
    std::vector<FrameId> tail_ids;

    Index size() const
    {
        return static_cast<Index>(sink_ids.size() + history_ids.size() + tail_ids.size());
    }
    bool empty() const { return size() == 0; }

    /// Sink, then history, then tail.
    std::vector<FrameId> all_ids() const;

    friend bool operator==(const StructuredMemory&, const StructuredMemory&) = default;
};

}  // namespace relaxkv
