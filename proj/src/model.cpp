#include "relaxkv/model.hpp"

#include "relaxkv/errors.hpp"

#include <cmath>
#include <random>

namespace relaxkv {

namespace {

MatrixXr gaussian(Index rows, Index cols, double stddev, std::mt19937_64& rng)
{
    std::normal_distribution<double> dist(0.0, stddev);
    MatrixXr m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            m(r, c) = dist(rng);
        }
    }
    return m;
}

constexpr std::uint64_t kWeightStream = 0x5745494748545321ULL;
constexpr std::uint64_t kOffsetStream = 0x4f46465345545321ULL;
constexpr std::uint64_t kFrameStream = 0x4652414d45535452ULL;

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b)
{
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void ModelShape::validate() const
{
    if (layers < 1 || heads < 1 || head_dim < 1 || tokens_per_frame < 1) {
        throw ConfigError("model dimensions must all be >= 1");
    }
    if (head_dim % 2 != 0) {
        throw ConfigError("model.head_dim must be even for rotary embedding");
    }
    if (!(rope_base > 1.0)) {
        throw ConfigError("model.rope_base must be > 1");
    }
}

ModelParams ModelParams::make(const ModelShape& shape, std::uint64_t seed)
{
    shape.validate();
    ModelParams m;
    m.shape = shape;
    m.seed = seed;
    m.rotary = RotaryParams{shape.rope_base, shape.head_dim};

    const Index d = shape.dim();
    const double w_std = 1.0 / std::sqrt(static_cast<double>(d));
    std::mt19937_64 rng(mix_seed(seed, kWeightStream));
    for (Index l = 0; l < shape.layers; ++l) {
        LayerWeights w;
        w.wq = gaussian(d, d, w_std, rng);
        w.wk = gaussian(d, d, w_std, rng);
        w.wv = gaussian(d, d, w_std, rng);
        w.wo = gaussian(d, d, w_std, rng);
        m.layers.push_back(std::move(w));
    }
    std::mt19937_64 offset_rng(mix_seed(seed, kOffsetStream));
    m.token_offsets = gaussian(shape.tokens_per_frame, d, 1.0, offset_rng);
    return m;
}

LatentFrame initial_latent(const ModelParams& model, FrameId id)
{
    std::mt19937_64 rng(mix_seed(mix_seed(model.seed, kFrameStream), static_cast<std::uint64_t>(id)));
    LatentFrame f;
    f.id = id;
    f.latent = model.token_offsets + gaussian(model.tokens(), model.dim(), 1.0, rng);
    return f;
}

std::vector<LatentFrame> initial_chunk(const ModelParams& model, std::span<const FrameId> ids)
{
    std::vector<LatentFrame> out;
    out.reserve(ids.size());
    for (FrameId id : ids) {
        out.push_back(initial_latent(model, id));
    }
    return out;
}

}  // namespace relaxkv
