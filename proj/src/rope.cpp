#include "relaxkv/rope.hpp"

#include <algorithm>

namespace relaxkv {

Index PositionPlan::position_of(FrameId id) const
{
    for (const auto& [fid, pos] : assignments) {
        if (fid == id) {
            return pos;
        }
    }
    throw ContractError("position plan has no entry for frame " + std::to_string(id));
}

bool PositionPlan::covers(FrameId id) const
{
    return std::any_of(assignments.begin(), assignments.end(), [id](const auto& a) { return a.first == id; });
}

void RotaryParams::validate() const
{
    if (dim < 2 || dim % 2 != 0) {
        throw ConfigError("rotary dimension must be even and >= 2, got " + std::to_string(dim));
    }
    if (!(base_theta > 1.0)) {
        throw ConfigError("rotary base must be > 1");
    }
}

PositionPlan relaxed_positions(const StructuredMemory& mem, Index current_index, Index chunk_size)
{
    const auto n_tail = static_cast<Index>(mem.tail_ids.size());
    const auto n_anchor = static_cast<Index>(mem.sink_ids.size() + mem.history_ids.size());
    const Index tail_start = current_index - n_tail;
    const Index anchor_start = tail_start - n_anchor;
    if (tail_start < 0 || anchor_start < 0) {
        throw InvalidStepError("memory of " + std::to_string(mem.size()) + " frames does not fit before index " +
                               std::to_string(current_index));
    }

    auto ascending = [](std::vector<FrameId> ids) {
        std::sort(ids.begin(), ids.end());
        return ids;
    };

    PositionPlan plan;
    plan.assignments.reserve(static_cast<std::size_t>(mem.size()));
    Index pos = anchor_start;
    for (FrameId id : ascending(mem.sink_ids)) {
        plan.assignments.emplace_back(id, pos++);
    }
    for (FrameId id : ascending(mem.history_ids)) {
        plan.assignments.emplace_back(id, pos++);
    }
    for (FrameId id : ascending(mem.tail_ids)) {
        plan.assignments.emplace_back(id, pos++);
    }
    for (Index u = 0; u < chunk_size; ++u) {
        plan.current_chunk_positions.push_back(current_index + u);
    }
    return plan;
}

PositionPlan window_positions(std::span<const FrameId> anchor_ids, std::span<const FrameId> new_ids,
                              Index chunk_size, Index window_size)
{
    if (static_cast<Index>(anchor_ids.size()) != chunk_size) {
        throw ContractError("window anchor must hold exactly one chunk of " + std::to_string(chunk_size) +
                            " frames");
    }
    const auto total = static_cast<Index>(anchor_ids.size() + new_ids.size());
    if (total > window_size) {
        throw WindowOverflowError("window of " + std::to_string(window_size) + " frames cannot hold " +
                                  std::to_string(total));
    }
    PositionPlan plan;
    Index pos = 0;
    for (FrameId id : anchor_ids) {
        plan.assignments.emplace_back(id, pos++);
    }
    for (FrameId id : new_ids) {
        plan.assignments.emplace_back(id, pos++);
    }
    for (Index p = total - chunk_size; p < total; ++p) {
        plan.current_chunk_positions.push_back(p);
    }
    return plan;
}

}  // namespace relaxkv
