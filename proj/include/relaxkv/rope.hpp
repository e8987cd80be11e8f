#pragma once

#include "relaxkv/errors.hpp"
#include "relaxkv/types.hpp"

#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace relaxkv {

/// Temporal positions used for one generation step. Positions are frame
/// granular: every token of a frame shares its frame's index.
struct PositionPlan {
    std::vector<std::pair<FrameId, Index>> assignments;
    std::vector<Index> current_chunk_positions;

    /// Throws ContractError if `id` has no assignment.
    Index position_of(FrameId id) const;
    bool covers(FrameId id) const;

    friend bool operator==(const PositionPlan&, const PositionPlan&) = default;
};

struct RotaryParams {
    double base_theta = 10000.0;
    Index dim = 16;

    void validate() const;
};

/// Hybrid indexing for a structured memory at generation index i.
///
/// Tail frames keep absolute indices {p_T, ..., i-1} with p_T = i - |T|. Sink
/// then History (ascending id within each role) fill the contiguous range
/// ending at p_T - 1. The chunk being generated gets {i, ..., i+U-1}.
PositionPlan relaxed_positions(const StructuredMemory& mem, Index current_index, Index chunk_size);

/// Sliding-window indexing: anchor frames get {0..U-1}, then `new_ids` follow
/// in generation order. The chunk positions are the last U assigned indices.
PositionPlan window_positions(std::span<const FrameId> anchor_ids, std::span<const FrameId> new_ids,
                              Index chunk_size, Index window_size);

/// Rotation angle for dimension pair j at `position`.
inline double rotary_angle(Index position, Index pair, const RotaryParams& params)
{
    const double exponent = -2.0 * static_cast<double>(pair) / static_cast<double>(params.dim);
    return static_cast<double>(position) * std::pow(params.base_theta, exponent);
}

/// Rotates every row of `m` (each of length params.dim) in place, pairing
/// dimensions (2j, 2j+1).
template <typename Derived>
void rotate_rows_inplace(const Eigen::MatrixBase<Derived>& m_, Index position, const RotaryParams& params)
{
    auto& m = const_cast<Eigen::MatrixBase<Derived>&>(m_);
    if (params.dim % 2 != 0) {
        throw ConfigError("rotary dimension must be even");
    }
    if (m.cols() != params.dim) {
        throw ContractError("rotary input has " + std::to_string(m.cols()) + " columns, expected " +
                            std::to_string(params.dim));
    }
    using Scalar = typename Derived::Scalar;
    for (Index j = 0; j < params.dim / 2; ++j) {
        const double theta = rotary_angle(position, j, params);
        const auto c = static_cast<Scalar>(std::cos(theta));
        const auto s = static_cast<Scalar>(std::sin(theta));
        for (Index r = 0; r < m.rows(); ++r) {
            const Scalar x0 = m(r, 2 * j);
            const Scalar x1 = m(r, 2 * j + 1);
            m(r, 2 * j) = x0 * c - x1 * s;
            m(r, 2 * j + 1) = x0 * s + x1 * c;
        }
    }
}

/// Rotary embedding of a single vector at `position`.
template <typename Derived>
typename Derived::PlainObject apply_rotary(const Eigen::MatrixBase<Derived>& vec, Index position,
                                           const RotaryParams& params)
{
    if (params.dim % 2 != 0) {
        throw ConfigError("rotary dimension must be even");
    }
    if (!vec.derived().IsVectorAtCompileTime && vec.rows() != 1 && vec.cols() != 1) {
        throw ContractError("apply_rotary expects a vector");
    }
    typename Derived::PlainObject out = vec;
    Eigen::Map<RowMatrix<typename Derived::Scalar>> row(out.data(), 1, out.size());
    rotate_rows_inplace(row, position, params);
    return out;
}

}  // namespace relaxkv
