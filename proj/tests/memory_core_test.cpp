#include "relaxkv/memory_core.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

namespace relaxkv {
namespace {

Frame frame_with_keys(FrameId id, const MatrixXr& keys)
{
    Frame f;
    f.id = id;
    f.keys = {keys};
    f.values = {MatrixXr::Zero(keys.rows(), keys.cols())};
    return f;
}

MemoryConfig roles(Index sink, Index tail)
{
    MemoryConfig c;
    c.n_sink = sink;
    c.n_tail = tail;
    return c;
}

std::vector<FrameId> ids(std::initializer_list<FrameId> l) { return l; }

// Exhaustive oracle: the unique k-subset whose every member beats every
// non-member under (relaxation desc, id desc).
std::vector<FrameId> enumerate_top_k(const std::vector<ScoredCandidate>& sc, Index k)
{
    const auto n = sc.size();
    const auto take = static_cast<std::size_t>(std::min<Index>(k, static_cast<Index>(n)));
    auto beats = [](const ScoredCandidate& a, const ScoredCandidate& b) {
        return a.relaxation > b.relaxation || (a.relaxation == b.relaxation && a.frame_id > b.frame_id);
    };
    std::vector<std::vector<FrameId>> winners;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != take) {
            continue;
        }
        bool dominant = true;
        for (std::size_t a = 0; a < n && dominant; ++a) {
            for (std::size_t b = 0; b < n && dominant; ++b) {
                if ((mask >> a & 1u) && !(mask >> b & 1u) && !beats(sc[a], sc[b])) {
                    dominant = false;
                }
            }
        }
        if (dominant) {
            std::vector<FrameId> chosen;
            for (std::size_t a = 0; a < n; ++a) {
                if (mask >> a & 1u) {
                    chosen.push_back(sc[a].frame_id);
                }
            }
            std::sort(chosen.begin(), chosen.end());
            winners.push_back(chosen);
        }
    }
    EXPECT_EQ(winners.size(), 1u);
    return winners.empty() ? std::vector<FrameId>{} : winners.front();
}

TEST(Partition, SteadyStateSplit)
{
    const auto p = partition(10, roles(2, 1));
    EXPECT_EQ(p.sink_ids, ids({0, 1}));
    EXPECT_EQ(p.candidate_ids, ids({2, 3, 4, 5, 6, 7, 8}));
    EXPECT_EQ(p.tail_ids, ids({9}));
}

TEST(Partition, WarmupFillsTailThenSink)
{
    const auto p = partition(2, roles(2, 1));
    EXPECT_EQ(p.sink_ids, ids({0}));
    EXPECT_TRUE(p.candidate_ids.empty());
    EXPECT_EQ(p.tail_ids, ids({1}));
}

TEST(Partition, EmptyRollout)
{
    const auto p = partition(0, MemoryConfig{});
    EXPECT_TRUE(p.sink_ids.empty());
    EXPECT_TRUE(p.candidate_ids.empty());
    EXPECT_TRUE(p.tail_ids.empty());
}

TEST(Partition, TotalDisjointAndCovering)
{
    for (Index i = 0; i < 40; ++i) {
        for (Index s = 0; s < 5; ++s) {
            for (Index t = 0; t < 5; ++t) {
                const auto p = partition(i, roles(s, t));
                std::vector<FrameId> all = p.sink_ids;
                all.insert(all.end(), p.candidate_ids.begin(), p.candidate_ids.end());
                all.insert(all.end(), p.tail_ids.begin(), p.tail_ids.end());
                ASSERT_EQ(static_cast<Index>(all.size()), i);
                for (Index n = 0; n < i; ++n) {
                    ASSERT_EQ(all[static_cast<std::size_t>(n)], n) << "i=" << i << " s=" << s << " t=" << t;
                }
            }
        }
    }
}

TEST(RestrictCandidates, OddSizeKeepsSecondHalf)
{
    Partition p;
    p.candidate_ids = ids({2, 3, 4, 5, 6, 7, 8});
    EXPECT_EQ(restrict_candidates(p), ids({6, 7, 8}));
}

TEST(RestrictCandidates, EvenSizeExactHalf)
{
    Partition p;
    p.candidate_ids = ids({2, 3, 4, 5});
    EXPECT_EQ(restrict_candidates(p), ids({4, 5}));
}

TEST(RestrictCandidates, Empty) { EXPECT_TRUE(restrict_candidates(Partition{}).empty()); }

TEST(SamplePool, ClampsWhenSmall)
{
    const auto r = ids({6, 7, 8});
    EXPECT_EQ(sample_pool(r, 4), r);
}

TEST(SamplePool, FloorSpacedPositions)
{
    const auto r = ids({10, 11, 12, 13, 14, 15, 16, 17});
    EXPECT_EQ(sample_pool(r, 4), ids({10, 12, 14, 17}));
}

TEST(SamplePool, IdentityAtExactSize)
{
    const auto r = ids({3, 4, 5, 6});
    EXPECT_EQ(sample_pool(r, 4), r);
}

TEST(SamplePool, SingleSlotKeepsMostRecent) { EXPECT_EQ(sample_pool(ids({1, 2, 3}), 1), ids({3})); }

TEST(SamplePool, RejectsZeroPool) { EXPECT_THROW(sample_pool(ids({1}), 0), ContractError); }

TEST(FramePrototype, NormalizesMeanKey)
{
    MatrixXr k(2, 2);
    k << 3, 4, 3, 4;
    const auto p = frame_prototype(frame_with_keys(0, k));
    EXPECT_NEAR(p.vec(0), 0.6, 1e-12);
    EXPECT_NEAR(p.vec(1), 0.8, 1e-12);
}

TEST(FramePrototype, UnitKeyIsIdentity)
{
    MatrixXr k(1, 2);
    k << 0, 1;
    const auto p = frame_prototype(frame_with_keys(0, k));
    EXPECT_DOUBLE_EQ(p.vec(0), 0.0);
    EXPECT_DOUBLE_EQ(p.vec(1), 1.0);
}

TEST(FramePrototype, ZeroMeanIsDegenerate)
{
    MatrixXr k(2, 2);
    k << 1, 0, -1, 0;
    EXPECT_THROW(frame_prototype(frame_with_keys(0, k)), DegeneratePrototypeError);
}

TEST(FramePrototype, PoolsHeadsAndLayers)
{
    // Two layers, two heads of width 2: every head slice and layer averaged.
    Frame f;
    f.id = 3;
    MatrixXr l0(1, 4), l1(1, 4);
    l0 << 1, 0, 0, 0;
    l1 << 0, 0, 1, 2;
    f.keys = {l0, l1};
    f.values = {MatrixXr::Zero(1, 4), MatrixXr::Zero(1, 4)};
    const auto p = frame_prototype(f, KeyPooling{2, std::nullopt});
    ASSERT_EQ(p.vec.size(), 2);
    EXPECT_NEAR(p.vec(0), 2.0 / std::sqrt(8.0), 1e-12);
    EXPECT_NEAR(p.vec(1), 2.0 / std::sqrt(8.0), 1e-12);

    const auto only_l1 = frame_prototype(f, KeyPooling{2, 1});
    EXPECT_NEAR(only_l1.vec(0), 1.0 / std::sqrt(5.0), 1e-12);
    EXPECT_NEAR(only_l1.vec(1), 2.0 / std::sqrt(5.0), 1e-12);
    EXPECT_THROW(frame_prototype(f, KeyPooling{2, 2}), ContractError);
    EXPECT_THROW(frame_prototype(f, KeyPooling{3, std::nullopt}), ContractError);
}

TEST(FramePrototype, TemplatedOnFloat)
{
    BasicFrame<float> f;
    f.keys = {RowMatrix<float>::Constant(2, 2, 2.0f)};
    f.values = f.keys;
    const auto p = frame_prototype(f);
    EXPECT_NEAR(p.vec.norm(), 1.0f, 1e-6f);
}

TEST(GroupPrototype, SingletonMatchesFrame)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    MatrixXr k = MatrixXr::NullaryExpr(5, 4, [&] { return g(rng); });
    const std::vector<Frame> group{frame_with_keys(0, k)};
    const auto a = group_prototype<double>(std::span<const Frame>(group));
    const auto b = frame_prototype(group.front());
    EXPECT_LT((a.vec - b.vec).norm(), 1e-15);
}

TEST(GroupPrototype, IdenticalFrames)
{
    MatrixXr k(1, 2);
    k << 2, 0;
    const std::vector<Frame> group{frame_with_keys(0, k), frame_with_keys(1, k)};
    const auto p = group_prototype<double>(std::span<const Frame>(group));
    EXPECT_DOUBLE_EQ(p.vec(0), 1.0);
    EXPECT_DOUBLE_EQ(p.vec(1), 0.0);
}

TEST(GroupPrototype, PoolsTokensNotFrames)
{
    // Frame a has 1 token, frame b has 3: the pooled mean weights tokens equally.
    MatrixXr a(1, 2), b(3, 2);
    a << 4, 0;
    b << 0, 0, 0, 0, 0, 4;
    Frame fa = frame_with_keys(0, a);
    Frame fb = frame_with_keys(1, b);
    const std::vector<const Frame*> group{&fa, &fb};
    const auto p = group_prototype<double>(std::span<const Frame* const>(group));
    EXPECT_NEAR(p.vec(0), 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(p.vec(1), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(GroupPrototype, EmptyGroupErrors)
{
    const std::vector<Frame> none;
    EXPECT_THROW(group_prototype<double>(std::span<const Frame>(none)), EmptyGroupError);
}

Prototype proto(double x, double y)
{
    Prototype p;
    p.vec.resize(2);
    p.vec << x, y;
    return p;
}

TEST(ScoreCandidate, Examples)
{
    const auto sink = proto(1, 0);
    const auto tail = proto(0, 1);

    auto s = score_candidate(0, proto(1, 0), sink, tail, 2.0);
    EXPECT_DOUBLE_EQ(s.stability, 1.0);
    EXPECT_DOUBLE_EQ(s.redundancy, 0.0);
    EXPECT_DOUBLE_EQ(s.relaxation, 1.0);

    s = score_candidate(0, proto(0, 1), sink, tail, 2.0);
    EXPECT_DOUBLE_EQ(s.stability, 0.0);
    EXPECT_DOUBLE_EQ(s.redundancy, 1.0);
    EXPECT_DOUBLE_EQ(s.relaxation, -2.0);

    s = score_candidate(0, proto(0.6, 0.8), sink, tail, 2.0);
    EXPECT_NEAR(s.stability, 0.6, 1e-15);
    EXPECT_NEAR(s.redundancy, 0.8, 1e-15);
    EXPECT_NEAR(s.relaxation, -1.0, 1e-15);
}

Prototype random_unit(std::mt19937_64& rng, Index d)
{
    std::normal_distribution<double> g;
    Prototype p;
    p.vec = Eigen::VectorXd::NullaryExpr(d, [&] { return g(rng); });
    p.vec.normalize();
    return p;
}

TEST(ScoreCandidate, IdentityAndBoundsProperty)
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 2000; ++trial) {
        const double lambda = std::uniform_real_distribution<double>(0.0, 5.0)(rng);
        const auto s = score_candidate(trial, random_unit(rng, 8), random_unit(rng, 8), random_unit(rng, 8), lambda);
        ASSERT_LE(std::abs(s.relaxation - (s.stability - lambda * s.redundancy)), 1e-9);
        ASSERT_LE(std::abs(s.stability), 1.0 + 1e-6);
        ASSERT_LE(std::abs(s.redundancy), 1.0 + 1e-6);
    }
}

std::vector<ScoredCandidate> with_scores(std::initializer_list<std::pair<FrameId, double>> l)
{
    std::vector<ScoredCandidate> out;
    for (auto [id, r] : l) {
        ScoredCandidate s;
        s.frame_id = id;
        s.relaxation = r;
        out.push_back(s);
    }
    return out;
}

TEST(SelectHistory, TakesMaximum)
{
    const auto sc = with_scores({{6, 0.2}, {7, -0.5}, {8, 0.7}});
    EXPECT_EQ(select_history(sc, 1), ids({8}));
}

TEST(SelectHistory, TieGoesToMoreRecent)
{
    const auto sc = with_scores({{6, 0.5}, {7, 0.5}});
    EXPECT_EQ(select_history(sc, 1), ids({7}));
}

TEST(SelectHistory, OutputSortedAndClamped)
{
    const auto sc = with_scores({{9, 0.9}, {3, 0.8}, {5, -1.0}});
    EXPECT_EQ(select_history(sc, 2), ids({3, 9}));
    EXPECT_EQ(select_history(sc, 10), ids({3, 5, 9}));
    EXPECT_TRUE(select_history(sc, 0).empty());
    EXPECT_TRUE(select_history({}, 3).empty());
}

TEST(SelectHistory, MatchesExhaustiveOracle)
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = std::uniform_int_distribution<int>(0, 12)(rng);
        std::vector<ScoredCandidate> sc;
        for (int c = 0; c < n; ++c) {
            ScoredCandidate s;
            s.frame_id = 100 + c;
            // Coarse grid so ties occur regularly.
            s.relaxation = std::uniform_int_distribution<int>(-4, 4)(rng) * 0.25;
            sc.push_back(s);
        }
        std::shuffle(sc.begin(), sc.end(), rng);
        const Index k = std::uniform_int_distribution<int>(0, 4)(rng);
        ASSERT_EQ(select_history(sc, k), enumerate_top_k(sc, k)) << "trial " << trial;
    }
}

TEST(SelectHistory, LambdaZeroOrdersByStability)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto sink = random_unit(rng, 6);
        const auto tail = random_unit(rng, 6);
        std::vector<ScoredCandidate> sc;
        for (FrameId id = 0; id < 9; ++id) {
            sc.push_back(score_candidate(id, random_unit(rng, 6), sink, tail, 0.0));
        }
        auto by_stability = sc;
        for (auto& s : by_stability) {
            s.relaxation = s.stability;
        }
        ASSERT_EQ(select_history(sc, 3), enumerate_top_k(by_stability, 3));
    }
}

TEST(SelectHistory, ScaleInvariantUnderKeyScaling)
{
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    auto random_frame = [&](FrameId id) {
        return frame_with_keys(id, MatrixXr::NullaryExpr(4, 6, [&] { return g(rng); }));
    };
    std::vector<Frame> frames;
    for (FrameId id = 0; id < 8; ++id) {
        frames.push_back(random_frame(id));
    }
    auto select_with_scale = [&](double scale) {
        std::vector<Frame> scaled = frames;
        for (auto& f : scaled) {
            f.keys[0] *= scale;
        }
        const auto sink = group_prototype<double>(std::span<const Frame>(scaled.data(), 2));
        const auto tail = group_prototype<double>(std::span<const Frame>(scaled.data() + 7, 1));
        std::vector<ScoredCandidate> sc;
        for (std::size_t n = 2; n < 7; ++n) {
            sc.push_back(score_candidate(scaled[n].id, frame_prototype(scaled[n]), sink, tail, 2.0));
        }
        return std::make_pair(select_history(sc, 2), sc);
    };
    const auto [base_sel, base_sc] = select_with_scale(1.0);
    const auto [big_sel, big_sc] = select_with_scale(37.5);
    EXPECT_EQ(base_sel, big_sel);
    for (std::size_t n = 0; n < base_sc.size(); ++n) {
        EXPECT_NEAR(base_sc[n].relaxation, big_sc[n].relaxation, 1e-12);
    }
}

TEST(SelectHistory, PoolClampSelectsWholePool)
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        MemoryConfig cfg;
        cfg.n_history = cfg.pool_size = std::uniform_int_distribution<int>(1, 5)(rng);
        const auto p = partition(std::uniform_int_distribution<int>(4, 60)(rng), cfg);
        const auto pool = sample_pool(restrict_candidates(p), cfg.pool_size);
        std::vector<ScoredCandidate> sc;
        for (FrameId id : pool) {
            ScoredCandidate s;
            s.frame_id = id;
            s.relaxation = std::normal_distribution<double>()(rng);
            sc.push_back(s);
        }
        ASSERT_EQ(select_history(sc, cfg.n_history), pool);
    }
}

TEST(BuildMemory, AssemblesRoles)
{
    const auto p = partition(10, roles(2, 1));
    const auto history = ids({7});
    const auto m = build_memory(p, history);
    EXPECT_EQ(m.sink_ids, ids({0, 1}));
    EXPECT_EQ(m.history_ids, ids({7}));
    EXPECT_EQ(m.tail_ids, ids({9}));
    EXPECT_EQ(m.all_ids(), ids({0, 1, 7, 9}));
}

TEST(BuildMemory, HistoryFree)
{
    const auto m = build_memory(partition(10, roles(2, 1)), {});
    EXPECT_EQ(m.all_ids(), ids({0, 1, 9}));
}

TEST(BuildMemory, RejectsHistoryOutsideRestrictedRegion)
{
    const auto p = partition(10, roles(2, 1));
    const auto bad = ids({2});
    EXPECT_THROW(build_memory(p, bad), ContractError);
    const auto dup = ids({7, 7});
    EXPECT_THROW(build_memory(p, dup), ContractError);
}

TEST(MemoryConfig, DefaultsAndValidation)
{
    MemoryConfig c;
    EXPECT_EQ(c.n_sink, 2);
    EXPECT_EQ(c.n_tail, 1);
    EXPECT_EQ(c.n_history, 1);
    EXPECT_EQ(c.pool_size, 4);
    EXPECT_DOUBLE_EQ(c.lambda, 2.0);
    EXPECT_EQ(c.chunk_size, 3);
    EXPECT_NO_THROW(c.validate());

    c.pool_size = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = MemoryConfig{};
    c.n_history = 5;
    EXPECT_THROW(c.validate(), ConfigError);
    c = MemoryConfig{};
    c.lambda = -1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = MemoryConfig{};
    c.window_size = 2;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Names, RoundTrip)
{
    for (Policy p : {Policy::dense_window, Policy::attention_sink, Policy::relaxed, Policy::none, Policy::sink_only,
                     Policy::tail_only, Policy::history_only, Policy::full}) {
        EXPECT_EQ(parse_policy(to_string(p)), p);
    }
    EXPECT_THROW(parse_policy("dense"), ConfigError);
}

}  // namespace
}  // namespace relaxkv
