// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// End-to-end orchestration: per video, load -> frame selection -> cluster input for the
// mode -> topics -> summaries -> diagnostics -> metrics; then the run-level reports.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "mvtopic/config.hpp"
#include "mvtopic/corpus.hpp"
#include "mvtopic/diagnostics.hpp"
#include "mvtopic/encoder_client.hpp"
#include "mvtopic/error.hpp"
#include "mvtopic/frameselect.hpp"
#include "mvtopic/fusion.hpp"
#include "mvtopic/image_io.hpp"
#include "mvtopic/metrics.hpp"
#include "mvtopic/refine.hpp"
#include "mvtopic/text.hpp"
#include "mvtopic/topics.hpp"
#include "mvtopic/wordvec.hpp"

#ifndef MVTOPIC_VERSION
#define MVTOPIC_VERSION "0.0.0"
#endif

namespace mvt::pipeline {

inline constexpr std::string_view kVersion = MVTOPIC_VERSION;

/// Shared read-only inputs resolved once per run.
struct Resources {
    std::optional<WordVectorTable> word_vectors;
    text::StopwordSet stopwords = text::default_stopwords();
    std::vector<cluster::SeedTopic> seeds;
};

inline Resources load_resources(const PipelineConfig& cfg) {
    Resources r;
    if (!cfg.word_vectors.empty()) r.word_vectors = load_word_vectors(cfg.word_vectors);
    if (!cfg.stopwords.empty()) r.stopwords = text::load_stopwords(cfg.stopwords);
    if (cfg.seed_topics == "default") {
        r.seeds = cluster::default_seed_topics();
    } else if (!cfg.seed_topics.empty() && cfg.seed_topics != "none") {
        const auto doc = mvt::detail::read_file(cfg.seed_topics);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(doc);
        } catch (const nlohmann::json::exception&) {
            // Not JSON, so read it as a YAML list.
            const auto node = YAML::Load(doc);
            j = nlohmann::json::array();
            for (const auto& item : node) {
                nlohmann::json e;
                e["name"] = item["name"].as<std::string>();
                e["words"] = item["words"].as<std::vector<std::string>>();
                if (item["centroid"]) e["centroid"] = item["centroid"].as<std::vector<double>>();
                j.push_back(std::move(e));
            }
        }
        r.seeds = cluster::parse_seed_topics(j);
    }
    if (!r.seeds.empty()) cluster::build_seed_centroids(r.seeds, r.word_vectors ? &*r.word_vectors : nullptr);
    return r;
}

// ---- cluster input -------------------------------------------------------------

struct ClusterInput {
    EmbeddingMatrix matrix;
    std::optional<fusion::FusionResult> fusion;  // full mode only
    std::vector<std::optional<std::string>> segment_seeds;
    std::set<Modality> accessed;
};

/// Builds the matrix the topic path clusters. Only the modalities of `mode` are read;
/// `accessed` lists them. Guided blending acts on the text rows before fusion.
inline ClusterInput build_cluster_input(const VideoCorpus& corpus, Mode mode, const fusion::FusionWeights& weights,
                                        const std::vector<cluster::SeedTopic>& seeds, double blend_threshold) {
    ClusterInput out;
    VideoCorpus view(corpus.video_id(), corpus.segments());
    for (auto m : mode_modalities(mode)) {
        view.attach(corpus.matrix(m));
        out.accessed.insert(m);
    }
    out.segment_seeds.resize(corpus.size());
    if (!seeds.empty()) {
        const auto& T = view.matrix(Modality::text);
        auto blend = cluster::guided_blend(T.data.cast<double>(), seeds, blend_threshold);
        EmbeddingMatrix blended = T;
        blended.data = blend.embeddings.cast<float>();
        view.attach(std::move(blended));
        for (std::size_t i = 0; i < blend.matched.size(); ++i)
            if (blend.matched[i]) out.segment_seeds[i] = seeds[*blend.matched[i]].name;
    }
    switch (mode) {
        case Mode::text_only: out.matrix = view.matrix(Modality::text); break;
        case Mode::text_audio: out.matrix = fusion::concat_corpus(view, Modality::text, Modality::audio); break;
        case Mode::text_visual: out.matrix = fusion::concat_corpus(view, Modality::text, Modality::visual); break;
        case Mode::full: {
            auto f = fusion::fuse_corpus(view, weights);
            out.matrix = f.matrix;
            out.fusion = std::move(f);
            break;
        }
    }
    return out;
}

// ---- per-video processing ------------------------------------------------------

struct VideoResult {
    std::string video_id;
    bool ok = false;
    std::string error;
    std::vector<Segment> segments;
    cluster::TopicModel model;
    std::vector<refine::TopicSummary> summaries;
    metrics::VideoReport report;
    std::optional<std::vector<int>> speakers;
    ClusterInput input;
    std::vector<frames::FrameRecord> selected_frames;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, double>> timings_ms;
    std::map<Modality, std::string> input_hashes;
};

namespace detail {

class StageTimer {
public:
    explicit StageTimer(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}
    template <typename F>
    decltype(auto) operator()(const std::string& stage, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        struct Record {
            StageTimer* self;
            std::string stage;
            std::chrono::steady_clock::time_point t0;
            ~Record() {
                const auto dt = std::chrono::steady_clock::now() - t0;
                self->sink_.emplace_back(stage, std::chrono::duration<double, std::milli>(dt).count());
            }
        } record{this, stage, t0};
        return f();
    }

private:
    std::vector<std::pair<std::string, double>>& sink_;
};

}  // namespace detail

/// Topic path, diagnostics and metrics on an assembled corpus.
inline void analyze_video(const VideoCorpus& corpus, const PipelineConfig& cfg, const Resources& res,
                          VideoResult& out, Diagnostics& diag) {
    detail::StageTimer time(out.timings_ms);
    out.video_id = corpus.video_id();
    out.segments = corpus.segments();

    out.input = time("fusion", [&] {
        return build_cluster_input(corpus, cfg.mode, cfg.fusion, res.seeds, cfg.clustering.seed_blend_threshold);
    });
    cluster::AssignOptions opt;
    opt.params = cfg.clustering;
    opt.stopwords = &res.stopwords;
    out.model = time("topics", [&] {
        return cluster::assign_topics(out.input.matrix.data.cast<double>(), corpus.segments(), opt,
                                      out.input.segment_seeds, &diag);
    });
    out.summaries = time("summaries", [&] {
        return refine::summarize_model(out.model, corpus.segments(), cfg.summary_sentences, res.stopwords);
    });

    if (cfg.diagnostics.enabled) {
        if (corpus.has(Modality::audio) && out.input.accessed.count(Modality::audio)) {
            out.speakers = time("diagnostics", [&] {
                return diagnostics::speaker_style_labels(corpus.matrix(Modality::audio), cfg.diagnostics.params, &diag);
            });
        } else {
            diag.warn("diagnostics skipped: mode " + std::string(to_string(cfg.mode)) + " does not load audio");
        }
    }

    time("metrics", [&] {
        metrics::EvaluationInputs ev;
        ev.labels = out.model.labels;
        ev.segments = &corpus.segments();
        for (const auto& t : out.model.topics) {
            std::vector<std::string> words;
            for (const auto& [w, _] : t.top_words) words.push_back(w);
            ev.top_words.push_back(std::move(words));
        }
        ev.top_k = cfg.clustering.top_k_words;
        ev.word_vectors = res.word_vectors ? &*res.word_vectors : nullptr;
        ev.npmi_epsilon = cfg.metrics.npmi_epsilon;
        ev.structure.exclude_outlier_transitions = cfg.metrics.exclude_outlier_transitions;
        for (auto space : cfg.metrics.spaces) {
            if (space == Modality::fused) {
                if (corpus.has(Modality::text) && corpus.has(Modality::audio) && corpus.has(Modality::visual))
                    ev.spaces[space] = fusion::fuse_corpus(corpus, cfg.fusion).matrix.data.cast<double>();
            } else if (corpus.has(space)) {
                ev.spaces[space] = corpus.matrix(space).data.cast<double>();
            }
        }
        out.report = metrics::evaluate_video(corpus.video_id(), ev);
    });
    out.ok = true;
}

// ---- loading -------------------------------------------------------------------

inline std::string endpoint_url(const std::string& base, Modality m) {
    const auto url = encoder::split_url(base);
    return url.path == "/" ? url.scheme_host_port + "/embed/" + std::string(to_string(m)) : base;
}

/// Frame selection for every segment; returns the selected records in segment order.
inline std::vector<std::vector<frames::FrameRecord>> select_frames(const std::vector<Segment>& segments,
                                                                   const std::vector<frames::FrameRecord>& manifest,
                                                                   const std::string& video_id,
                                                                   const frames::SelectionParams& params,
                                                                   std::vector<std::vector<Eigen::VectorXd>>* features,
                                                                   Diagnostics& diag) {
    const auto groups = frames::group_by_segment(manifest, video_id);
    std::vector<std::vector<frames::FrameRecord>> out(segments.size());
    if (features) features->assign(segments.size(), {});
    for (std::size_t i = 0; i < segments.size(); ++i) {
        auto it = groups.find(i);
        if (it == groups.end()) {
            diag.warn(video_id + " segment " + std::to_string(i) + ": no frame candidates");
            continue;
        }
        std::vector<frames::FrameCandidate> cands;
        std::vector<const frames::FrameRecord*> recs;
        for (const auto& r : it->second) {
            frames::FrameDescription d;
            try {
                d = frames::describe_frame(frames::load_raster(r.path));
            } catch (const InputError& e) {
                diag.warn(e.what());
                continue;
            }
            cands.push_back({r.timestamp, d.feature, d.sharpness_raw, 1.0});
            recs.push_back(&r);
        }
        frames::normalize_sharpness(cands);
        for (const auto& s : frames::rank_and_select(cands, segments[i].t_start, segments[i].t_end, params)) {
            auto rec = *recs[s.candidate];
            rec.rank = s.rank;
            rec.score = s.score;
            out[i].push_back(rec);
            if (features) (*features)[i].push_back(cands[s.candidate].feature);
        }
    }
    return out;
}

struct LoadedVideo {
    VideoCorpus corpus;
    std::vector<frames::FrameRecord> selected_frames;
};

/// Loads the modalities `mode` needs plus any file-backed evaluation spaces.
inline LoadedVideo load_video(const VideoInputs& in, const PipelineConfig& cfg, VideoResult& out, Diagnostics& diag) {
    detail::StageTimer time(out.timings_ms);
    LoadedVideo lv;
    auto segments = time("load_segments", [&] { return load_segments(in.segments, in.id, &diag); });
    lv.corpus = VideoCorpus(in.id, std::move(segments));
    const auto n = lv.corpus.size();
    const auto required = mode_modalities(cfg.mode);
    auto is_required = [&](Modality m) { return std::find(required.begin(), required.end(), m) != required.end(); };
    auto wanted = [&](Modality m) {
        if (is_required(m)) return true;
        for (auto s : cfg.metrics.spaces)
            if (s == m || s == Modality::fused) return true;
        return false;
    };

    for (auto m : {Modality::text, Modality::audio, Modality::visual}) {
        if (!wanted(m)) continue;
        const auto file = in.embeddings.find(m);
        const bool endpoint = cfg.endpoints.count(m) && is_required(m);
        if (file != in.embeddings.end() && std::filesystem::exists(file->second)) {
            time("load_" + std::string(to_string(m)), [&] {
                const auto bytes = mvt::detail::read_file(file->second);
                out.input_hashes[m] = hex64(fnv1a(bytes));
                auto mat = load_embeddings(file->second, n, m);
                if (mat.modality != m)
                    diag.warn(file->second.string() + ": header says " + std::string(to_string(mat.modality)) +
                              ", used as " + std::string(to_string(m)));
                mat.modality = m;
                lv.corpus.attach(std::move(mat));
            });
        } else if (m == Modality::visual && !in.frames.empty()) {
            time("frames", [&] {
                const auto manifest = frames::load_frame_manifest(in.frames);
                std::vector<std::vector<Eigen::VectorXd>> feats;
                const auto sel = select_frames(lv.corpus.segments(), manifest, in.id, cfg.selection, &feats, diag);
                EmbeddingMatrix V;
                V.modality = Modality::visual;
                Eigen::MatrixXd pooled;
                if (endpoint) {
                    std::vector<std::string> paths;
                    for (const auto& s : sel)
                        for (const auto& r : s) paths.push_back(r.path);
                    const auto E = encoder::fetch_embeddings(endpoint_url(cfg.endpoints.at(m), m),
                                                             encoder::visual_request(paths), cfg.retry);
                    V.source = E.source;
                    const Eigen::MatrixXd Ed = E.data.cast<double>();
                    pooled.resize(static_cast<Eigen::Index>(n), Ed.cols());
                    Eigen::Index row = 0;
                    for (std::size_t i = 0; i < n; ++i) {
                        const auto k = static_cast<Eigen::Index>(sel[i].size());
                        pooled.row(static_cast<Eigen::Index>(i)) =
                            frames::pool_visual(Ed.middleRows(row, k), static_cast<std::size_t>(Ed.cols()), &diag)
                                .transpose();
                        row += k;
                    }
                } else {
                    diag.warn(in.id + ": no visual encoder configured, pooling texture-color descriptors");
                    V.source = "texture-color-descriptor";
                    pooled.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(frames::kFeatureDims));
                    for (std::size_t i = 0; i < n; ++i) {
                        Eigen::MatrixXd F(static_cast<Eigen::Index>(feats[i].size()),
                                          static_cast<Eigen::Index>(frames::kFeatureDims));
                        for (std::size_t j = 0; j < feats[i].size(); ++j)
                            F.row(static_cast<Eigen::Index>(j)) = feats[i][j].transpose();
                        pooled.row(static_cast<Eigen::Index>(i)) =
                            frames::pool_visual(F, frames::kFeatureDims, &diag).transpose();
                    }
                }
                V.data = pooled.cast<float>();
                lv.corpus.attach(std::move(V));
                for (const auto& s : sel) lv.selected_frames.insert(lv.selected_frames.end(), s.begin(), s.end());
            });
        } else if (endpoint) {
            time("fetch_" + std::string(to_string(m)), [&] {
                const auto request = m == Modality::text ? encoder::text_request(lv.corpus.segments())
                                                         : encoder::audio_request(lv.corpus.segments(), in.media.string());
                lv.corpus.attach(encoder::fetch_embeddings(endpoint_url(cfg.endpoints.at(m), m), request, cfg.retry));
            });
        } else if (is_required(m)) {
            throw ConfigError(in.id + ": mode " + std::string(to_string(cfg.mode)) + " needs " +
                              std::string(to_string(m)) + " embeddings");
        }
    }
    return lv;
}

/// Discovers <corpus_dir>/<video>/segments.jsonl with sibling text.emb, audio.emb,
/// visual.emb (or .csv), frames.jsonl and media.wav.
inline std::vector<VideoInputs> discover_videos(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ConfigError("corpus_dir " + dir.string() + " is not a directory");
    std::vector<VideoInputs> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_directory() || !fs::exists(e.path() / "segments.jsonl")) continue;
        VideoInputs v;
        v.id = e.path().filename().string();
        v.segments = e.path() / "segments.jsonl";
        for (auto m : {Modality::text, Modality::audio, Modality::visual})
            for (const char* ext : {".emb", ".csv"}) {
                const auto p = e.path() / (std::string(to_string(m)) + ext);
                if (fs::exists(p) && !v.embeddings.count(m)) v.embeddings[m] = p;
            }
        if (fs::exists(e.path() / "frames.jsonl")) v.frames = e.path() / "frames.jsonl";
        if (fs::exists(e.path() / "media.wav")) v.media = e.path() / "media.wav";
        out.push_back(std::move(v));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    if (out.empty()) throw ConfigError("no videos found under " + dir.string());
    return out;
}

// ---- outputs -------------------------------------------------------------------

inline nlohmann::ordered_json topics_json(const VideoResult& r, Mode mode) {
    nlohmann::ordered_json j;
    j["video_id"] = r.video_id;
    j["mode"] = std::string(to_string(mode));
    const auto model = cluster::topic_model_json(r.model);
    for (const auto& [k, v] : model.items()) j[k] = v;
    auto& sums = j["summaries"] = nlohmann::ordered_json::array();
    for (const auto& s : r.summaries) {
        nlohmann::ordered_json sj;
        sj["topic_id"] = s.topic_id;
        const auto summary = refine::summary_json(s);
        for (const auto& [k, v] : summary.items()) sj[k] = v;
        sums.push_back(std::move(sj));
    }
    return j;
}

inline nlohmann::ordered_json timeline_json(const VideoResult& r) {
    std::map<std::size_t, std::vector<std::string>> frames_by_segment;
    for (const auto& f : r.selected_frames) frames_by_segment[f.segment_index].push_back(f.path);
    nlohmann::ordered_json j;
    j["video_id"] = r.video_id;
    auto& segs = j["segments"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.segments.size(); ++i) {
        const auto& s = r.segments[i];
        nlohmann::ordered_json sj;
        sj["index"] = s.index;
        sj["start"] = s.t_start;
        sj["end"] = s.t_end;
        sj["topic"] = r.model.labels[i];
        sj["seed"] = r.model.segment_seeds[i] ? nlohmann::ordered_json(*r.model.segment_seeds[i]) : nlohmann::ordered_json(nullptr);
        sj["speaker"] = r.speakers ? nlohmann::ordered_json((*r.speakers)[i]) : nlohmann::ordered_json(nullptr);
        sj["gate"] = r.input.fusion ? nlohmann::ordered_json(r.input.fusion->gates[i].s) : nlohmann::ordered_json(nullptr);
        sj["frames"] = frames_by_segment.count(i) ? frames_by_segment[i] : std::vector<std::string>{};
        sj["text"] = s.text;
        segs.push_back(std::move(sj));
    }
    return j;
}

struct RunResult {
    std::vector<VideoResult> videos;
    std::map<std::string, metrics::AggregateValue> aggregate;
    nlohmann::ordered_json manifest;
    std::size_t failed = 0;
};

inline nlohmann::ordered_json metrics_json(const RunResult& run, const PipelineConfig& cfg) {
    nlohmann::ordered_json j;
    j["mode"] = std::string(to_string(cfg.mode));
    auto& vids = j["videos"] = nlohmann::ordered_json::array();
    for (const auto& v : run.videos)
        if (v.ok) vids.push_back(metrics::report_json(v.report));
    j["aggregate"] = metrics::aggregate_json(run.aggregate);
    j["definitions"] = metrics::formula_definitions();
    return j;
}

/// Writes every per-video artifact plus metrics.json and manifest.json.
inline void write_outputs(const RunResult& run, const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    for (const auto& v : run.videos) {
        if (!v.ok) continue;
        const auto dir = cfg.output_dir / v.video_id;
        fs::create_directories(dir);
        mvt::detail::write_file(dir / "topics.json", topics_json(v, cfg.mode).dump(2) + "\n");
        mvt::detail::write_file(dir / "timeline.json", timeline_json(v).dump(2) + "\n");
        write_embeddings(dir / "cluster_input.emb", v.input.matrix);
        if (v.input.fusion)
            mvt::detail::write_file(dir / "gates.json", fusion::gate_sidecar(v.video_id, *v.input.fusion).dump(2) + "\n");
        if (!v.selected_frames.empty())
            mvt::detail::write_file(dir / "selected_frames.jsonl", frames::format_selected_frames(v.selected_frames));
    }
    mvt::detail::write_file(cfg.output_dir / "metrics.json", metrics_json(run, cfg).dump(2) + "\n");
    mvt::detail::write_file(cfg.output_dir / "manifest.json", run.manifest.dump(2) + "\n");
}

// ---- run -----------------------------------------------------------------------

/// Runs `work(i)` for i in [0, n) on a bounded pool of jthreads.
template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F&& work) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) work(i);
        });
}

inline nlohmann::ordered_json build_manifest(const RunResult& run, const PipelineConfig& cfg) {
    nlohmann::ordered_json m;
    m["tool_version"] = std::string(kVersion);
    m["config_hash"] = cfg.hash();
    m["config"] = cfg.to_json();
    m["mode"] = std::string(to_string(cfg.mode));
    auto& vids = m["videos"] = nlohmann::ordered_json::array();
    for (const auto& v : run.videos) {
        nlohmann::ordered_json vj;
        vj["video_id"] = v.video_id;
        vj["status"] = v.ok ? "ok" : "failed";
        if (!v.ok) vj["error"] = v.error;
        auto& hashes = vj["input_hashes"] = nlohmann::ordered_json::object();
        for (const auto& [mod, h] : v.input_hashes) hashes[std::string(to_string(mod))] = h;
        vj["modalities_used"] = nlohmann::ordered_json::array();
        for (auto mod : v.input.accessed) vj["modalities_used"].push_back(std::string(to_string(mod)));
        auto& t = vj["timings_ms"] = nlohmann::ordered_json::object();
        for (const auto& [stage, ms] : v.timings_ms) t[stage] = ms;
        vj["warnings"] = v.warnings;
        vids.push_back(std::move(vj));
    }
    m["failed"] = run.failed;
    m["definitions"] = metrics::formula_definitions();
    return m;
}

inline void finish(RunResult& run, const PipelineConfig& cfg) {
    std::vector<metrics::VideoReport> reports;
    for (const auto& v : run.videos) {
        if (v.ok) reports.push_back(v.report);
        else ++run.failed;
    }
    run.aggregate = metrics::aggregate(reports);
    run.manifest = build_manifest(run, cfg);
}

/// Processes already-assembled corpora (tests, ablations). Nothing is written.
inline RunResult run_corpora(const std::vector<VideoCorpus>& corpora, const PipelineConfig& cfg,
                             const Resources& res = {}) {
    RunResult run;
    run.videos.resize(corpora.size());
    parallel_for(corpora.size(), cfg.workers, [&](std::size_t i) {
        Diagnostics diag;
        auto& out = run.videos[i];
        out.video_id = corpora[i].video_id();
        try {
            analyze_video(corpora[i], cfg, res, out, diag);
        } catch (const std::exception& e) {
            out.ok = false;
            out.error = e.what();
        }
        out.warnings = diag.warnings();
    });
    finish(run, cfg);
    return run;
}

/// Full run from configuration: load, analyze, write outputs. A failing video is
/// recorded in the manifest and the rest continue.
inline RunResult run(const PipelineConfig& cfg) {
    cfg.validate();
    const Resources res = load_resources(cfg);
    const auto inputs = cfg.videos.empty() ? discover_videos(cfg.corpus_dir) : cfg.videos;
    RunResult run;
    run.videos.resize(inputs.size());
    parallel_for(inputs.size(), cfg.workers, [&](std::size_t i) {
        Diagnostics diag;
        auto& out = run.videos[i];
        out.video_id = inputs[i].id;
        try {
            auto lv = load_video(inputs[i], cfg, out, diag);
            out.selected_frames = std::move(lv.selected_frames);
            analyze_video(lv.corpus, cfg, res, out, diag);
        } catch (const std::exception& e) {
            out.ok = false;
            out.error = e.what();
        }
        out.warnings = diag.warnings();
    });
    finish(run, cfg);
    write_outputs(run, cfg);
    return run;
}

}  // namespace mvt::pipeline
