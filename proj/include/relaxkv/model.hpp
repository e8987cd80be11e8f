#pragma once

#include "relaxkv/rope.hpp"
#include "relaxkv/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace relaxkv {

struct ModelShape {
    Index layers = 2;
    Index heads = 4;
    Index head_dim = 16;
    Index tokens_per_frame = 16;
    double rope_base = 10000.0;

    Index dim() const { return heads * head_dim; }
    void validate() const;
};

struct LayerWeights {
    MatrixXr wq, wk, wv, wo;  // d x d, applied as x * W
};

/// Desk-scale stand-in for a video diffusion transformer. Every weight is a
/// pure function of (shape, seed).
struct ModelParams {
    ModelShape shape;
    std::uint64_t seed = 0;
    RotaryParams rotary;
    std::vector<LayerWeights> layers;
    MatrixXr token_offsets;  // F x d spatial offset channel added to every frame

    static ModelParams make(const ModelShape& shape, std::uint64_t seed);

    Index dim() const { return shape.dim(); }
    Index tokens() const { return shape.tokens_per_frame; }
};

/// Input latent of a frame about to be generated.
struct LatentFrame {
    FrameId id = 0;
    MatrixXr latent;  // F x d
};

/// Seeded noise latent for frame `id`, plus the fixed per-token offsets.
LatentFrame initial_latent(const ModelParams& model, FrameId id);

std::vector<LatentFrame> initial_chunk(const ModelParams& model, std::span<const FrameId> ids);

/// SplitMix64 finalizer, used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace relaxkv
