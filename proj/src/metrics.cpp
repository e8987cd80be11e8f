#include "relaxkv/metrics.hpp"

#include "relaxkv/errors.hpp"

#include <algorithm>
#include <cmath>

namespace relaxkv {

namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const double na = a.norm();
    const double nb = b.norm();
    if (!(na > 1e-12) || !(nb > 1e-12)) {
        throw DegenerateFeatureError("clip feature has zero norm");
    }
    return a.dot(b) / (na * nb);
}

void require_clips(const ClipFeatures& f)
{
    if (f.clips.size() < 2) {
        throw ContractError("temporal metrics need at least 2 clips, got " + std::to_string(f.clips.size()));
    }
    for (const auto& c : f.clips) {
        if (c.size() != f.clips.front().size()) {
            throw ContractError("clip features have different dimensions");
        }
        if (!c.allFinite()) {
            throw DegenerateFeatureError("clip feature is not finite");
        }
    }
}

std::vector<double> min_max_scaled(std::span<const double> values)
{
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double range = *hi - *lo;
    std::vector<double> out(values.size(), 0.0);
    if (range > 0.0) {
        for (std::size_t n = 0; n < values.size(); ++n) {
            out[n] = (values[n] - *lo) / range;
        }
    }
    return out;
}

}  // namespace

ClipFeatures make_clips(std::span<const Eigen::VectorXd> frame_features, Index clip_frames)
{
    if (clip_frames < 1) {
        throw ConfigError("clip length must be >= 1 frame");
    }
    ClipFeatures out;
    out.clip_frames = clip_frames;
    const auto w = static_cast<std::size_t>(clip_frames);
    for (std::size_t start = 0; start + w <= frame_features.size(); start += w) {
        Eigen::VectorXd sum = frame_features[start];
        for (std::size_t n = 1; n < w; ++n) {
            sum += frame_features[start + n];
        }
        out.clips.push_back(sum / static_cast<double>(clip_frames));
    }
    return out;
}

double drift(const ClipFeatures& features)
{
    require_clips(features);
    return std::max(0.0, 1.0 - cosine(features.clips.front(), features.clips.back()));
}

double repetition(const ClipFeatures& features)
{
    require_clips(features);
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < features.clips.size(); ++a) {
        for (std::size_t b = a + 1; b < features.clips.size(); ++b) {
            sum += cosine(features.clips[a], features.clips[b]);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

std::vector<double> balance(std::span<const double> drifts, std::span<const double> repetitions)
{
    if (drifts.size() != repetitions.size()) {
        throw ContractError("balance needs one drift and one repetition per method");
    }
    if (drifts.size() < 2) {
        throw ContractError("balance is defined relative to at least 2 methods");
    }
    const auto d = min_max_scaled(drifts);
    const auto r = min_max_scaled(repetitions);
    std::vector<double> out(d.size());
    for (std::size_t n = 0; n < d.size(); ++n) {
        out[n] = d[n] + r[n];
    }
    return out;
}

double cost_ratio(const CostReport& baseline, const CostReport& method)
{
    if (method.score_ops == 0) {
        throw ContractError("cost ratio undefined: method performs no attention score operations");
    }
    return static_cast<double>(baseline.score_ops) / static_cast<double>(method.score_ops);
}

}  // namespace relaxkv
