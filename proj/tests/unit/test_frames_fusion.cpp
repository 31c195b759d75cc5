// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "mvtopic/frameselect.hpp"
#include "mvtopic/fusion.hpp"
#include "oracles.hpp"

using namespace mvt;
using namespace mvt::frames;
using namespace mvt::fusion;

namespace {

Raster uniform(std::size_t w, std::size_t h, std::uint8_t value) {
    Raster r;
    r.width = w;
    r.height = h;
    r.rgb.assign(w * h * 3, value);
    return r;
}

Raster checkerboard(std::size_t w, std::size_t h) {
    Raster r = uniform(w, h, 0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            if ((x + y) % 2 == 0)
                for (std::size_t c = 0; c < 3; ++c) r.rgb[(y * w + x) * 3 + c] = 255;
    return r;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

oracle::Vec to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::vector<std::size_t> picks(const std::vector<SelectedFrame>& s) {
    std::vector<std::size_t> out;
    for (const auto& f : s) out.push_back(f.candidate);
    return out;
}

/// Replays the relevance formula for the oracle so both sides start from the same inputs.
std::vector<double> relevance_of(const std::vector<FrameCandidate>& c, double t0, double t1, const SelectionParams& p) {
    std::vector<double> r;
    for (const auto& f : c) {
        const double mid = 0.5 * (t0 + t1), half = 0.5 * (t1 - t0);
        r.push_back(p.lambda_center * (1.0 - std::min(1.0, std::abs(f.timestamp - mid) / half)) +
                    p.lambda_sharpness * f.sharpness_norm);
    }
    return r;
}

}  // namespace

// ---- candidate timestamps -------------------------------------------------------

TEST(CandidateTimestamps, DefaultPoolHasTwenty) {
    EXPECT_EQ(SelectionParams{}.pool_size(), 20u);
    EXPECT_EQ(candidate_timestamps(0.0, 10.0, {}).size(), 20u);
}

TEST(CandidateTimestamps, UniformInteriorSpacing) {
    const auto t = candidate_timestamps(0.0, 21.0, {});
    ASSERT_EQ(t.size(), 20u);
    EXPECT_DOUBLE_EQ(t.front(), 1.0);
    EXPECT_DOUBLE_EQ(t.back(), 20.0);
    for (std::size_t j = 1; j < t.size(); ++j) EXPECT_NEAR(t[j] - t[j - 1], 1.0, 1e-12);
}

TEST(CandidateTimestamps, MinimumCountWins) {
    SelectionParams p;
    p.k = 1;
    p.alpha = 1;
    EXPECT_EQ(candidate_timestamps(3.0, 4.0, p).size(), 8u);
}

TEST(CandidateTimestamps, ShortSpanFallsBackToMidpoint) {
    Diagnostics diag;
    const auto t = candidate_timestamps(2.0, 2.01, {}, &diag);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_DOUBLE_EQ(t[0], 2.005);
    EXPECT_EQ(diag.warnings().size(), 1u);
}

TEST(CandidateTimestamps, RejectsEmptySpan) { EXPECT_THROW(candidate_timestamps(5.0, 5.0, {}), ValidationError); }

// ---- center preference ----------------------------------------------------------

TEST(CenterPreference, Examples) {
    EXPECT_DOUBLE_EQ(center_preference(5.0, 0.0, 10.0), 1.0);
    EXPECT_DOUBLE_EQ(center_preference(0.0, 0.0, 10.0), 0.0);
    EXPECT_DOUBLE_EQ(center_preference(2.5, 0.0, 10.0), 0.5);
    for (double x : {0.3, 1.7, 4.9}) EXPECT_DOUBLE_EQ(center_preference(5.0 + x, 0.0, 10.0), center_preference(5.0 - x, 0.0, 10.0));
}

// ---- frame description ----------------------------------------------------------

TEST(DescribeFrame, UniformGrayHasZeroSharpness) {
    const auto d = describe_frame(uniform(40, 30, 128));
    EXPECT_EQ(d.feature.size(), static_cast<Eigen::Index>(kFeatureDims));
    EXPECT_EQ(d.sharpness_raw, 0.0);
    EXPECT_NEAR(d.feature.norm(), 1.0, 1e-6);
    // One occupied bin per channel.
    const auto hist = d.feature.tail(3 * kHistogramBins);
    EXPECT_EQ((hist.array() > 0.0).count(), 3);
}

TEST(DescribeFrame, CheckerboardIsSharper) {
    EXPECT_GT(describe_frame(checkerboard(33, 17)).sharpness_raw, describe_frame(uniform(33, 17, 90)).sharpness_raw);
}

TEST(DescribeFrame, UnitNormOnRandomImages) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> px(0, 255);
    for (std::size_t w : {1u, 5u, 64u}) {
        Raster r = uniform(w, w + 3, 0);
        for (auto& b : r.rgb) b = static_cast<std::uint8_t>(px(rng));
        EXPECT_NEAR(describe_frame(r).feature.norm(), 1.0, 1e-6);
    }
}

TEST(DescribeFrame, ZeroAreaIsInputError) { EXPECT_THROW(describe_frame(Raster{}), InputError); }

TEST(NormalizeSharpness, MinMaxAndFlatPool) {
    std::vector<FrameCandidate> c(3);
    c[0].sharpness_raw = 2.0;
    c[1].sharpness_raw = 4.0;
    c[2].sharpness_raw = 3.0;
    normalize_sharpness(c);
    EXPECT_DOUBLE_EQ(c[0].sharpness_norm, 0.0);
    EXPECT_DOUBLE_EQ(c[1].sharpness_norm, 1.0);
    EXPECT_DOUBLE_EQ(c[2].sharpness_norm, 0.5);
    for (auto& f : c) f.sharpness_raw = 7.0;
    normalize_sharpness(c);
    for (auto& f : c) EXPECT_DOUBLE_EQ(f.sharpness_norm, 1.0);
}

// ---- rank and select ------------------------------------------------------------

TEST(RankAndSelect, NuZeroIsTopKByRelevance) {
    SelectionParams p;
    p.k = 3;
    p.nu = 0.0;
    std::vector<FrameCandidate> c;
    const std::vector<double> sharp = {0.1, 0.9, 0.4, 0.7, 0.2, 0.5};
    for (std::size_t j = 0; j < sharp.size(); ++j) {
        FrameCandidate f;
        f.timestamp = 5.0;
        f.feature = Eigen::VectorXd::Unit(6, static_cast<Eigen::Index>(j));
        f.sharpness_norm = sharp[j];
        c.push_back(f);
    }
    EXPECT_EQ(picks(rank_and_select(c, 0.0, 10.0, p)), (std::vector<std::size_t>{1, 3, 5}));
}

TEST(RankAndSelect, IdenticalCandidatesSelectedOnce) {
    SelectionParams p;
    std::vector<FrameCandidate> c(2);
    for (auto& f : c) {
        f.timestamp = 4.0;
        f.feature = vec({0.6, 0.8});
    }
    const auto s = rank_and_select(c, 0.0, 10.0, p);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].candidate, 0u);
}

TEST(RankAndSelect, HandFixtureMatchesOracle) {
    SelectionParams p;
    p.k = 3;
    p.nu = 0.5;
    const std::vector<double> ts = {1.0, 3.0, 5.0, 5.5, 7.0, 9.0};
    const std::vector<double> sharp = {0.2, 1.0, 0.0, 0.9, 0.5, 0.3};
    const std::vector<Eigen::VectorXd> feats = {vec({1, 0, 0}), vec({0.9, 0.1, 0}), vec({1, 0.05, 0}),
                                                vec({0, 1, 0}), vec({0, 0.7, 0.7}), vec({0, 0, 1})};
    std::vector<FrameCandidate> c;
    oracle::Mat of;
    for (std::size_t j = 0; j < ts.size(); ++j) {
        FrameCandidate f;
        f.timestamp = ts[j];
        f.feature = feats[j].normalized();
        f.sharpness_norm = sharp[j];
        c.push_back(f);
        of.push_back(to_vec(f.feature));
    }
    const auto got = picks(rank_and_select(c, 0.0, 10.0, p));
    EXPECT_EQ(got, oracle::mmr(relevance_of(c, 0.0, 10.0, p), of, p.k, p.nu, p.dedup_threshold));
    EXPECT_EQ(got.size(), 3u);
}

TEST(RankAndSelect, RandomPoolsMatchOracle) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 8;
        SelectionParams p;
        p.k = 1 + rng() % 5;
        p.nu = u(rng);
        p.dedup_threshold = 0.5 + 0.5 * u(rng);
        std::vector<FrameCandidate> c;
        oracle::Mat of;
        for (std::size_t j = 0; j < n; ++j) {
            FrameCandidate f;
            f.timestamp = 10.0 * u(rng);
            f.feature = Eigen::VectorXd(4);
            for (Eigen::Index d = 0; d < 4; ++d) f.feature(d) = g(rng) + (d == 0 ? 1.5 : 0.0);
            f.feature.normalize();
            f.sharpness_norm = u(rng);
            c.push_back(f);
            of.push_back(to_vec(f.feature));
        }
        ASSERT_EQ(picks(rank_and_select(c, 0.0, 10.0, p)),
                  oracle::mmr(relevance_of(c, 0.0, 10.0, p), of, p.k, p.nu, p.dedup_threshold))
            << "trial " << trial;
    }
}

TEST(RankAndSelect, SelectedPairsStayBelowThreshold) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<FrameCandidate> c(20);
    for (std::size_t j = 0; j < c.size(); ++j) {
        c[j].timestamp = 0.5 * static_cast<double>(j + 1);
        c[j].feature = Eigen::VectorXd::Constant(3, 2.0) + 0.3 * Eigen::VectorXd::NullaryExpr(3, [&] { return g(rng); });
        c[j].feature.normalize();
    }
    const auto s = rank_and_select(c, 0.0, 10.5, {});
    EXPECT_LE(s.size(), 5u);
    for (std::size_t a = 0; a < s.size(); ++a)
        for (std::size_t b = a + 1; b < s.size(); ++b)
            EXPECT_LE(frames::cosine(c[s[a].candidate].feature, c[s[b].candidate].feature), 0.96);
}

// ---- pooling --------------------------------------------------------------------

TEST(PoolVisual, MeanAndPermutationInvariance) {
    Eigen::MatrixXd m(2, 2);
    m << 1, 0, 0, 1;
    EXPECT_TRUE(pool_visual(m).isApprox(vec({0.5, 0.5})));
    EXPECT_TRUE(pool_visual(m.topRows(1)).isApprox(vec({1, 0})));
    Eigen::MatrixXd r = Eigen::MatrixXd::Random(5, 4);
    Eigen::MatrixXd p = r;
    p.row(0) = r.row(3);
    p.row(3) = r.row(0);
    p.row(1) = r.row(4);
    p.row(4) = r.row(1);
    EXPECT_LT((pool_visual(r) - pool_visual(p)).norm(), 1e-12);
}

TEST(PoolVisual, EmptyGivesZeroWithWarning) {
    Diagnostics diag;
    const auto v = pool_visual(Eigen::MatrixXd(0, 0), 4, &diag);
    EXPECT_EQ(v.size(), 4);
    EXPECT_EQ(v.norm(), 0.0);
    EXPECT_EQ(diag.warnings().size(), 1u);
}

TEST(FrameManifest, ParseGroupAndFormat) {
    const auto recs = parse_frame_manifest(
        "{\"video_id\":\"a\",\"segment_index\":1,\"timestamp\":3.5,\"path\":\"f2.png\"}\n"
        "{\"video_id\":\"a\",\"segment_index\":1,\"timestamp\":2.0,\"path\":\"f1.png\"}\n"
        "{\"video_id\":\"b\",\"segment_index\":0,\"timestamp\":1.0,\"path\":\"g.png\"}\n");
    const auto g = group_by_segment(recs, "a");
    ASSERT_EQ(g.size(), 1u);
    ASSERT_EQ(g.at(1).size(), 2u);
    EXPECT_EQ(g.at(1)[0].path, "f1.png");
    EXPECT_EQ(format_selected_frames({g.at(1)[0]}),
              "{\"video_id\":\"a\",\"segment_index\":1,\"timestamp\":2.0,\"path\":\"f1.png\",\"rank\":0,\"score\":0.0}\n");
    EXPECT_THROW(parse_frame_manifest("{\"video_id\":\"a\"}\n"), ParseError);
}

// ---- fusion ---------------------------------------------------------------------

TEST(NormalizeTruncate, Examples) {
    EXPECT_TRUE(normalize_truncate(vec({3, 4, 0, 0}), 2).isApprox(vec({0.6, 0.8})));
    const auto u = vec({0.6, 0.8});
    EXPECT_EQ(normalize_truncate(u, 2), u);
    const auto z = normalize_truncate(Eigen::VectorXd::Zero(5), 3);
    EXPECT_EQ(z.size(), 3);
    EXPECT_TRUE(z.allFinite());
    EXPECT_EQ(z.norm(), 0.0);
    EXPECT_THROW(normalize_truncate(vec({1, 2}), 3), DimensionError);
}

TEST(Gate, HandValues) {
    const auto e1 = vec({1, 0, 0}), e2 = vec({0, 1, 0}), e3 = vec({0, 0, 1});
    EXPECT_NEAR(gate(e1, e1, e1).s, 1.0, 1e-12);
    EXPECT_NEAR(gate(e1, e2, e3).s, 0.5, 1e-12);
    const auto g = gate(e1, -e1, e1);
    EXPECT_NEAR(g.sim_ta, -1.0, 1e-12);
    EXPECT_NEAR(g.sim_tv, 1.0, 1e-12);
    EXPECT_NEAR(g.sim_av, -1.0, 1e-12);
    EXPECT_NEAR(g.s, 1.0 / 3.0, 1e-12);
    EXPECT_THROW(gate(e1, vec({1, 0}), e1), DimensionError);
}

TEST(Fuse, BasisVectorLayout) {
    const auto e1 = vec({1, 0, 0, 0});
    const auto m = fuse(e1, e1, e1, {}, gate(e1, e1, e1));
    ASSERT_EQ(m.vector.size(), 28);
    const std::vector<double> pre = {0.34, 0.33, 0.33, 1, 1, 1, 1};
    double norm = 0;
    for (double x : pre) norm += x * x;
    norm = std::sqrt(norm);
    for (Eigen::Index i = 0; i < 28; ++i) {
        const double want = i % 4 == 0 ? pre[static_cast<std::size_t>(i / 4)] / norm : 0.0;
        EXPECT_NEAR(m.vector(i), want, 1e-12) << "position " << i;
    }
    EXPECT_FALSE(m.degenerate);
}

TEST(Fuse, LowerGateShrinksWeightedBlocks) {
    const auto t = vec({1, 0, 0});
    auto ratio = [](const FusedEmbedding& m) {
        return m.vector.head(9).norm() / std::max(m.vector.tail(12).norm(), 1e-300);
    };
    // Same vectors fed through s=1 and s=0.5 isolates the effect of the gate.
    const auto hi = fuse(t, t, t, {}, gate(t, t, t));
    Gate half;
    half.s = 0.5;
    const auto lo = fuse(t, t, t, {}, half);
    EXPECT_LT(ratio(lo), ratio(hi));
    // Orthogonal inputs: the gate drops to 0.5 and the weighted blocks lose norm.
    const auto o = fuse(t, vec({0, 1, 0}), vec({0, 0, 1}), {}, gate(t, vec({0, 1, 0}), vec({0, 0, 1})));
    EXPECT_NEAR(o.gate.s, 0.5, 1e-12);
    EXPECT_LT(o.gate.s, hi.gate.s);
}

TEST(Fuse, AllZeroIsDegenerate) {
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(3);
    const auto m = fuse_raw(z, z, z, {});
    EXPECT_TRUE(m.degenerate);
    EXPECT_TRUE(m.vector.allFinite());
    EXPECT_EQ(m.vector.norm(), 0.0);
    EXPECT_THROW(fuse(z, Eigen::VectorXd::Zero(2), z, {}, Gate{}), DimensionError);
}

TEST(Fuse, ZeroModalityStillFinite) {
    const auto m = fuse_raw(vec({1, 2, 3}), Eigen::VectorXd::Zero(3), vec({3, 2, 1}), {});
    EXPECT_FALSE(m.degenerate);
    EXPECT_NEAR(m.vector.norm(), 1.0, 1e-12);
    EXPECT_NEAR(m.gate.sim_ta, 0.0, 1e-15);
    EXPECT_NEAR(m.gate.sim_av, 0.0, 1e-15);
}

TEST(Fuse, RescalingInvariance) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    auto rnd = [&](Eigen::Index d) { return Eigen::VectorXd(Eigen::VectorXd::NullaryExpr(d, [&] { return g(rng); })); };
    for (int i = 0; i < 20; ++i) {
        const auto t = rnd(6), a = rnd(5), v = rnd(4);
        const auto base = fuse_raw(t, a, v, {});
        EXPECT_LT((fuse_raw(2.5 * t, 0.1 * a, 7.0 * v, {}).vector - base.vector).norm(), 1e-12);
        EXPECT_EQ(base.vector.size(), 28);
        EXPECT_NEAR(base.vector.norm(), 1.0, 1e-12);
        EXPECT_GE(base.gate.s, 0.0);
        EXPECT_LE(base.gate.s, 1.0);
    }
}

TEST(ConcatPair, NoGateAndTwoBlocks) {
    const auto c = concat_pair(vec({3, 4, 9}), vec({0, 2}));
    ASSERT_EQ(c.size(), 4);
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_TRUE(c.isApprox(vec({0.6 * r, 0.8 * r, 0, r})));
}

namespace {

VideoCorpus three_row_corpus(bool audio_equals_text) {
    std::vector<Segment> segs(3);
    for (std::size_t i = 0; i < 3; ++i) {
        segs[i].index = i;
        segs[i].t_start = static_cast<double>(i);
        segs[i].t_end = static_cast<double>(i + 1);
    }
    VideoCorpus c("v", segs);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    auto make = [&](Modality m, Eigen::Index d) {
        EmbeddingMatrix e;
        e.modality = m;
        e.data = RowMatrixF::NullaryExpr(3, d, [&] { return static_cast<float>(g(rng)); });
        return e;
    };
    auto t = make(Modality::text, 6);
    auto a = make(Modality::audio, 5);
    if (audio_equals_text) a.data = t.data.leftCols(5);
    else {
        // Audio orthogonal to text in the shared leading coordinates.
        for (Eigen::Index r = 0; r < 3; ++r) {
            Eigen::VectorXf tr = t.data.row(r).head(4).transpose(), ar = a.data.row(r).head(4).transpose();
            ar -= tr * (tr.dot(ar) / tr.squaredNorm());
            a.data.row(r).head(4) = ar.transpose();
        }
    }
    c.attach(t);
    c.attach(a);
    c.attach(make(Modality::visual, 4));
    return c;
}

}  // namespace

TEST(FuseCorpus, DimensionsAndGateMonotonicity) {
    const auto same = fuse_corpus(three_row_corpus(true), {});
    const auto orth = fuse_corpus(three_row_corpus(false), {});
    EXPECT_EQ(same.matrix.rows(), 3u);
    EXPECT_EQ(same.matrix.dims(), 28u);
    EXPECT_EQ(same.matrix.modality, Modality::fused);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(same.gates[i].sim_ta, 1.0, 1e-6);
        EXPECT_NEAR(orth.gates[i].sim_ta, 0.0, 1e-6);
        EXPECT_NEAR(same.gates[i].sim_tv, orth.gates[i].sim_tv, 1e-6);
        EXPECT_GT(same.gates[i].s, orth.gates[i].s);
    }
}

TEST(FuseCorpus, MissingModalityIsConfigError) {
    auto c = three_row_corpus(true);
    VideoCorpus partial("v", c.segments());
    partial.attach(c.matrix(Modality::text));
    EXPECT_THROW(fuse_corpus(partial, {}), ConfigError);
}

TEST(FuseCorpus, RowPermutationEquivariance) {
    const auto c = three_row_corpus(false);
    VideoCorpus p("v", c.segments());
    for (auto m : {Modality::text, Modality::audio, Modality::visual}) {
        auto e = c.matrix(m);
        e.data.row(0).swap(e.data.row(2));
        p.attach(e);
    }
    const auto a = fuse_corpus(c, {}).matrix.data;
    const auto b = fuse_corpus(p, {}).matrix.data;
    EXPECT_EQ(a.row(0), b.row(2));
    EXPECT_EQ(a.row(1), b.row(1));
    EXPECT_EQ(a.row(2), b.row(0));
}

TEST(GateSidecar, Shape) {
    const auto r = fuse_corpus(three_row_corpus(true), {});
    const auto j = gate_sidecar("v", r);
    EXPECT_EQ(j["video_id"], "v");
    ASSERT_EQ(j["segments"].size(), 3u);
    EXPECT_TRUE(j["segments"][0].contains("s"));
    EXPECT_EQ(j["segments"][2]["index"], 2);
}
