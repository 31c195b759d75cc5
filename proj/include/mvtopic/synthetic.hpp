// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Planted-topic corpus generator for tests and ablations. Every video is a sequence of
// topic runs; each modality row is informativeness * topic_centroid + noise, so a modality
// with informativeness 0 is pure noise. Transcripts draw each token from the topic's
// pool with probability `lexical_purity`, else from a shared background pool.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mvtopic/corpus.hpp"

namespace mvt::synth {

struct Informativeness {
    double text = 1.0;
    double audio = 1.0;
    double visual = 1.0;
};

struct SyntheticSpec {
    std::size_t n_videos = 1;
    std::size_t segments_per_video = 60;
    std::size_t n_topics = 4;
    Informativeness inform;
    std::uint64_t seed = 1;
    std::size_t text_dims = 32;
    std::size_t audio_dims = 24;
    std::size_t visual_dims = 16;
    /// Per-coordinate noise standard deviation is noise / sqrt(dims).
    double noise = 0.35;
    std::size_t min_run = 3;
    std::size_t max_run = 10;
    std::size_t pool_words = 12;
    double lexical_purity = 0.7;
    std::size_t tokens_per_segment = 12;
};

/// Ablation preset: 10 videos x 60 segments, 4 topics, weak text, moderate audio,
/// strong visual signal.
inline SyntheticSpec ablation_spec(std::uint64_t seed) {
    SyntheticSpec s;
    s.n_videos = 10;
    s.segments_per_video = 60;
    s.n_topics = 4;
    s.inform = {0.12, 0.5, 1.0};
    s.noise = 0.2;
    s.seed = seed;
    return s;
}

struct SyntheticVideo {
    VideoCorpus corpus;
    std::vector<int> truth;
};

struct SyntheticCorpus {
    SyntheticSpec spec;
    std::vector<SyntheticVideo> videos;
    /// Vectors for every pool word, in text-embedding space.
    std::vector<std::pair<std::string, Eigen::VectorXd>> word_vectors;
};

namespace detail {

inline Eigen::VectorXd gaussian(std::mt19937_64& rng, std::size_t d, double sd) {
    std::normal_distribution<double> g(0.0, sd);
    Eigen::VectorXd v(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng);
    return v;
}

inline Eigen::VectorXd unit(std::mt19937_64& rng, std::size_t d) {
    Eigen::VectorXd v = gaussian(rng, d, 1.0);
    return v / v.norm();
}

/// Pronounceable pseudo-word, unique per (group, index).
inline std::string pseudo_word(std::size_t group, std::size_t index) {
    static const char* onset[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
    static const char* vowel[] = {"a", "e", "i", "o", "u"};
    std::string w;
    std::size_t x = group * 131 + index * 7 + 3;
    for (int syl = 0; syl < 3; ++syl) {
        w += onset[x % 14];
        w += vowel[(x / 14) % 5];
        x = x / 70 + (syl + 1) * 17 + group;
    }
    return w + std::to_string(group) + "x" + std::to_string(index);
}

}  // namespace detail

inline SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
    SyntheticCorpus out;
    out.spec = spec;
    std::mt19937_64 rng(spec.seed);
    const std::size_t T = std::max<std::size_t>(spec.n_topics, 1);

    std::vector<Eigen::VectorXd> ct, ca, cv;
    for (std::size_t k = 0; k < T; ++k) {
        ct.push_back(detail::unit(rng, spec.text_dims));
        ca.push_back(detail::unit(rng, spec.audio_dims));
        cv.push_back(detail::unit(rng, spec.visual_dims));
    }
    std::vector<std::vector<std::string>> pools(T + 1);
    for (std::size_t k = 0; k <= T; ++k)
        for (std::size_t j = 0; j < spec.pool_words; ++j) pools[k].push_back(detail::pseudo_word(k, j));
    for (std::size_t k = 0; k < T; ++k)
        for (const auto& w : pools[k])
            out.word_vectors.emplace_back(w, ct[k] + detail::gaussian(rng, spec.text_dims, 0.3 / std::sqrt(double(spec.text_dims))));

    std::uniform_int_distribution<std::size_t> run_len(spec.min_run, std::max(spec.min_run, spec.max_run));
    std::uniform_int_distribution<std::size_t> topic_pick(0, T - 1);
    std::uniform_int_distribution<std::size_t> word_pick(0, spec.pool_words - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_real_distribution<double> duration(3.0, 8.0);

    for (std::size_t v = 0; v < spec.n_videos; ++v) {
        SyntheticVideo video;
        const std::string id = "video_" + std::to_string(v);
        std::vector<Segment> segments;
        std::size_t current = topic_pick(rng);
        std::size_t left = run_len(rng);
        double t = 0.0;
        for (std::size_t i = 0; i < spec.segments_per_video; ++i) {
            if (left == 0) {
                std::size_t next = topic_pick(rng);
                if (T > 1)
                    while (next == current) next = topic_pick(rng);
                current = next;
                left = run_len(rng);
            }
            --left;
            video.truth.push_back(static_cast<int>(current));
            Segment s;
            s.video_id = id;
            s.index = i;
            s.t_start = t;
            t += duration(rng);
            s.t_end = t;
            for (std::size_t w = 0; w < spec.tokens_per_segment; ++w) {
                const auto& pool = coin(rng) < spec.lexical_purity ? pools[current] : pools[T];
                if (w > 0) s.text += (w % 6 == 0) ? ". " : " ";
                s.text += pool[word_pick(rng)];
            }
            s.text += ".";
            segments.push_back(std::move(s));
        }

        auto matrix = [&](Modality m, std::size_t d, const std::vector<Eigen::VectorXd>& centroids, double inform) {
            EmbeddingMatrix e;
            e.modality = m;
            e.source = "synthetic";
            e.data.resize(static_cast<Eigen::Index>(segments.size()), static_cast<Eigen::Index>(d));
            const double sd = spec.noise / std::sqrt(static_cast<double>(d));
            for (std::size_t i = 0; i < segments.size(); ++i) {
                Eigen::VectorXd row = inform * centroids[static_cast<std::size_t>(video.truth[i])] + detail::gaussian(rng, d, sd);
                e.data.row(static_cast<Eigen::Index>(i)) = row.cast<float>().transpose();
            }
            return e;
        };
        auto text = matrix(Modality::text, spec.text_dims, ct, spec.inform.text);
        auto audio = matrix(Modality::audio, spec.audio_dims, ca, spec.inform.audio);
        auto visual = matrix(Modality::visual, spec.visual_dims, cv, spec.inform.visual);
        video.corpus = VideoCorpus(id, std::move(segments));
        video.corpus.attach(std::move(text));
        video.corpus.attach(std::move(audio));
        video.corpus.attach(std::move(visual));
        out.videos.push_back(std::move(video));
    }
    return out;
}

/// Writes <dir>/<video>/{segments.jsonl,text.emb,audio.emb,visual.emb,truth.json},
/// <dir>/words.vec and a ready-to-run <dir>/config.yaml.
inline void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (const auto& v : corpus.videos) {
        const auto vdir = dir / v.corpus.video_id();
        fs::create_directories(vdir);
        mvt::detail::write_file(vdir / "segments.jsonl", format_segments(v.corpus.segments()));
        write_embeddings(vdir / "text.emb", v.corpus.matrix(Modality::text));
        write_embeddings(vdir / "audio.emb", v.corpus.matrix(Modality::audio));
        write_embeddings(vdir / "visual.emb", v.corpus.matrix(Modality::visual));
        nlohmann::ordered_json truth;
        truth["video_id"] = v.corpus.video_id();
        truth["labels"] = v.truth;
        mvt::detail::write_file(vdir / "truth.json", truth.dump(2) + "\n");
    }
    std::string words;
    for (const auto& [w, vec] : corpus.word_vectors) {
        words += w;
        for (Eigen::Index i = 0; i < vec.size(); ++i) {
            char buf[32];
            std::snprintf(buf, sizeof buf, " %.6f", vec(i));
            words += buf;
        }
        words += '\n';
    }
    mvt::detail::write_file(dir / "words.vec", words);
    const auto& s = corpus.spec;
    std::string cfg;
    cfg += "# synthetic corpus: seed " + std::to_string(s.seed) + ", " + std::to_string(s.n_topics) + " planted topics\n";
    cfg += "mode: full\n";
    // Paths are relative to the config file.
    cfg += "output_dir: out\n";
    cfg += "inputs:\n";
    cfg += "  corpus_dir: .\n";
    cfg += "  word_vectors: words.vec\n";
    mvt::detail::write_file(dir / "config.yaml", cfg);
}

}  // namespace mvt::synth
