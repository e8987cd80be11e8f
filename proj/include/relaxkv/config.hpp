#pragma once

#include "relaxkv/rollout.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace relaxkv {

/// One varied parameter of a sweep; `key` is the canonical section.name.
struct SweepAxis {
    std::string key;
    std::vector<std::string> values;
};

/// Fully resolved run settings: file contents, then --set overrides, then --seed.
///
/// File format is INI-style:
///
///     [memory]
///     policy = relaxed
///     n_sink = 2
///     [rollout]
///     seed = 7
///     [sweep]
///     memory.n_sink = 0,1,2,3
///     [compare]
///     policies = dense_window,relaxed
///
/// Overrides use the same dotted names (`memory.lambda=0.5`,
/// `sweep.memory.n_tail=0,1,2`). Unknown keys are rejected.
struct RunSettings {
    RolloutConfig rollout;
    bool seed_set = false;
    Index clip_chunks = 5;
    std::vector<SweepAxis> sweep;
    std::vector<Policy> compare_policies;

    /// Every scalar setting as (key, value) in a fixed order.
    std::vector<std::pair<std::string, std::string>> resolved() const;
};

RunSettings load_settings(const std::optional<std::filesystem::path>& config_file,
                          std::span<const std::string> overrides, std::optional<std::uint64_t> seed);

/// Sets one scalar key (`section.name`). Throws ConfigError on unknown keys
/// or malformed values.
void apply_setting(RunSettings& settings, const std::string& key, const std::string& value);

/// Cartesian product of the sweep axes applied on top of settings.rollout.
/// An axis on memory.history_position also switches the selector to
/// fixed_position.
std::vector<RolloutConfig> expand_grid(const RunSettings& settings);

std::string format_double(double v);

}  // namespace relaxkv
