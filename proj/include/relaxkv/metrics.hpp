#pragma once

#include "relaxkv/attention.hpp"
#include "relaxkv/types.hpp"

#include <span>
#include <vector>

namespace relaxkv {

/// Mean feature of each clip of consecutive frames.
struct ClipFeatures {
    std::vector<Eigen::VectorXd> clips;
    Index clip_frames = 0;
};

/// Groups per-frame features into non-overlapping clips of `clip_frames`
/// consecutive frames. A trailing partial clip is dropped.
ClipFeatures make_clips(std::span<const Eigen::VectorXd> frame_features, Index clip_frames);

/// 1 - cos(first clip, last clip).
double drift(const ClipFeatures& features);

/// Mean cosine similarity over all unordered clip pairs.
double repetition(const ClipFeatures& features);

/// Sum of min-max scaled drift and repetition across the compared methods.
/// A term whose values are all equal contributes 0 for every method.
std::vector<double> balance(std::span<const double> drifts, std::span<const double> repetitions);

/// baseline.score_ops / method.score_ops.
double cost_ratio(const CostReport& baseline, const CostReport& method);

struct MetricReport {
    double drift = 0.0;
    double repetition = 0.0;
    double balance = 0.0;
    double cost_ratio = 0.0;
};

}  // namespace relaxkv
