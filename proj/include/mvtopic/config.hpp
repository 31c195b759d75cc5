// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "mvtopic/corpus.hpp"
#include "mvtopic/encoder_client.hpp"
#include "mvtopic/error.hpp"
#include "mvtopic/frameselect.hpp"
#include "mvtopic/fusion.hpp"
#include "mvtopic/topics.hpp"

namespace mvt {

enum class Mode { text_only, text_audio, text_visual, full };

inline std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::text_only: return "text_only";
        case Mode::text_audio: return "text_audio";
        case Mode::text_visual: return "text_visual";
        case Mode::full: return "full";
    }
    return "full";
}

inline Mode parse_mode(std::string_view s) {
    if (s == "text_only") return Mode::text_only;
    if (s == "text_audio") return Mode::text_audio;
    if (s == "text_visual") return Mode::text_visual;
    if (s == "full") return Mode::full;
    throw ConfigError("unknown mode '" + std::string(s) + "' (expected text_only, text_audio, text_visual or full)");
}

/// Modalities the topic path of a mode consumes.
inline std::vector<Modality> mode_modalities(Mode m) {
    switch (m) {
        case Mode::text_only: return {Modality::text};
        case Mode::text_audio: return {Modality::text, Modality::audio};
        case Mode::text_visual: return {Modality::text, Modality::visual};
        case Mode::full: return {Modality::text, Modality::audio, Modality::visual};
    }
    return {};
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Input files of one video. Empty paths are absent.
struct VideoInputs {
    std::string id;
    std::filesystem::path segments;
    std::map<Modality, std::filesystem::path> embeddings;
    std::filesystem::path frames;  // frame manifest (JSON lines)
    std::filesystem::path media;   // audio/video file sent to an audio endpoint
};

struct DiagnosticsConfig {
    bool enabled = false;
    cluster::ClusterParams params;
};

struct MetricsConfig {
    std::vector<Modality> spaces{Modality::text, Modality::audio, Modality::visual, Modality::fused};
    bool exclude_outlier_transitions = false;
    double npmi_epsilon = 1e-12;
};

struct PipelineConfig {
    Mode mode = Mode::full;
    std::filesystem::path output_dir = "out";
    std::size_t workers = 1;

    std::filesystem::path corpus_dir;
    std::vector<VideoInputs> videos;
    std::filesystem::path word_vectors;
    std::filesystem::path stopwords;
    /// "none", "default" (built-in fifteen themes) or a path to a YAML/JSON seed list.
    std::string seed_topics = "none";

    std::map<Modality, std::string> endpoints;
    encoder::RetryPolicy retry;

    fusion::FusionWeights fusion;
    frames::SelectionParams selection;
    cluster::ClusterParams clustering;
    DiagnosticsConfig diagnostics;
    MetricsConfig metrics;
    std::size_t summary_sentences = 3;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    std::string hash() const { return hex64(fnv1a(to_json().dump())); }
};

namespace detail {

inline void check_keys(const YAML::Node& node, std::string_view section, std::initializer_list<std::string_view> known) {
    if (!node) return;
    if (!node.IsMap()) throw ConfigError("config section '" + std::string(section) + "' must be a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        bool ok = false;
        for (auto k : known) ok = ok || key == k;
        if (!ok) {
            const std::string where = section.empty() ? "top level" : "section '" + std::string(section) + "'";
            throw ConfigError("unknown config key '" + key + "' at " + where);
        }
    }
}

template <typename T>
void read(const YAML::Node& node, std::string_view key, T& out) {
    if (!node) return;
    const auto v = node[std::string(key)];
    if (!v) return;
    try {
        out = v.as<T>();
    } catch (const YAML::Exception& e) {
        throw ConfigError("config key '" + std::string(key) + "': " + e.what());
    }
}

inline void read_path(const YAML::Node& node, std::string_view key, std::filesystem::path& out,
                      const std::filesystem::path& base) {
    std::string s;
    read(node, key, s);
    if (s.empty()) return;
    std::filesystem::path p(s);
    out = p.is_absolute() || base.empty() ? p : base / p;
}

inline void read_cluster(const YAML::Node& n, std::string_view section, cluster::ClusterParams& p) {
    if (section == "diagnostics")
        check_keys(n, section,
                   {"reducer_components", "reducer_neighbors", "min_cluster_size", "merge_threshold", "top_k_words",
                    "min_doc_freq", "seed_blend_threshold", "enabled"});
    else
        check_keys(n, section,
                   {"reducer_components", "reducer_neighbors", "min_cluster_size", "merge_threshold", "top_k_words",
                    "min_doc_freq", "seed_blend_threshold"});
    read(n, "reducer_components", p.reducer_components);
    read(n, "reducer_neighbors", p.reducer_neighbors);
    read(n, "min_cluster_size", p.min_cluster_size);
    read(n, "merge_threshold", p.merge_threshold);
    read(n, "top_k_words", p.top_k_words);
    read(n, "min_doc_freq", p.min_doc_freq);
    read(n, "seed_blend_threshold", p.seed_blend_threshold);
}

inline nlohmann::ordered_json cluster_json(const cluster::ClusterParams& p) {
    return {{"reducer_components", p.reducer_components}, {"reducer_neighbors", p.reducer_neighbors},
            {"min_cluster_size", p.min_cluster_size},     {"merge_threshold", p.merge_threshold},
            {"top_k_words", p.top_k_words},               {"min_doc_freq", p.min_doc_freq},
            {"seed_blend_threshold", p.seed_blend_threshold}};
}

}  // namespace detail

/// Parses YAML text. Relative paths resolve against `base`. Unknown keys are errors.
inline PipelineConfig parse_config(const std::string& yaml, const std::filesystem::path& base = {}) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    PipelineConfig c;
    if (!root || root.IsNull()) return c;
    using detail::check_keys;
    using detail::read;
    check_keys(root, "",
               {"mode", "output_dir", "workers", "inputs", "endpoints", "fusion", "frame_selection", "clustering",
                "diagnostics", "metrics", "summaries"});

    std::string mode = std::string(to_string(c.mode));
    read(root, "mode", mode);
    c.mode = parse_mode(mode);
    detail::read_path(root, "output_dir", c.output_dir, base);
    read(root, "workers", c.workers);

    const auto in = root["inputs"];
    check_keys(in, "inputs", {"corpus_dir", "videos", "word_vectors", "stopwords", "seed_topics"});
    detail::read_path(in, "corpus_dir", c.corpus_dir, base);
    detail::read_path(in, "word_vectors", c.word_vectors, base);
    detail::read_path(in, "stopwords", c.stopwords, base);
    read(in, "seed_topics", c.seed_topics);
    if (c.seed_topics != "none" && c.seed_topics != "default" && !c.seed_topics.empty()) {
        std::filesystem::path p(c.seed_topics);
        c.seed_topics = (p.is_absolute() || base.empty() ? p : base / p).string();
    }
    if (in && in["videos"]) {
        if (!in["videos"].IsSequence()) throw ConfigError("inputs.videos must be a list");
        for (const auto& v : in["videos"]) {
            check_keys(v, "inputs.videos", {"id", "segments", "text", "audio", "visual", "frames", "media"});
            VideoInputs vi;
            read(v, "id", vi.id);
            if (vi.id.empty()) throw ConfigError("every entry of inputs.videos needs an id");
            detail::read_path(v, "segments", vi.segments, base);
            for (auto m : {Modality::text, Modality::audio, Modality::visual}) {
                std::filesystem::path p;
                detail::read_path(v, to_string(m), p, base);
                if (!p.empty()) vi.embeddings[m] = p;
            }
            detail::read_path(v, "frames", vi.frames, base);
            detail::read_path(v, "media", vi.media, base);
            c.videos.push_back(std::move(vi));
        }
    }

    const auto ep = root["endpoints"];
    check_keys(ep, "endpoints", {"text", "audio", "visual", "retries", "timeout_seconds"});
    for (auto m : {Modality::text, Modality::audio, Modality::visual}) {
        std::string url;
        read(ep, to_string(m), url);
        if (!url.empty()) c.endpoints[m] = url;
    }
    read(ep, "retries", c.retry.attempts);
    if (ep && ep["timeout_seconds"]) c.retry.timeout = std::chrono::seconds(ep["timeout_seconds"].as<long>());

    const auto fu = root["fusion"];
    check_keys(fu, "fusion", {"weights"});
    if (fu && fu["weights"]) {
        auto w = fu["weights"].as<std::vector<double>>();
        if (w.size() != 3) throw ConfigError("fusion.weights needs three values (text, audio, visual)");
        c.fusion = {w[0], w[1], w[2]};
    }

    const auto fs = root["frame_selection"];
    check_keys(fs, "frame_selection",
               {"k", "alpha", "min_candidates", "lambda_center", "lambda_sharpness", "nu", "dedup_threshold",
                "frame_duration"});
    read(fs, "k", c.selection.k);
    read(fs, "alpha", c.selection.alpha);
    read(fs, "min_candidates", c.selection.min_candidates);
    read(fs, "lambda_center", c.selection.lambda_center);
    read(fs, "lambda_sharpness", c.selection.lambda_sharpness);
    read(fs, "nu", c.selection.nu);
    read(fs, "dedup_threshold", c.selection.dedup_threshold);
    read(fs, "frame_duration", c.selection.frame_duration);

    detail::read_cluster(root["clustering"], "clustering", c.clustering);

    const auto dg = root["diagnostics"];
    detail::read_cluster(dg, "diagnostics", c.diagnostics.params);
    read(dg, "enabled", c.diagnostics.enabled);

    const auto me = root["metrics"];
    check_keys(me, "metrics", {"spaces", "exclude_outlier_transitions", "npmi_epsilon"});
    if (me && me["spaces"]) {
        c.metrics.spaces.clear();
        for (const auto& s : me["spaces"]) c.metrics.spaces.push_back(parse_modality(s.as<std::string>()));
    }
    read(me, "exclude_outlier_transitions", c.metrics.exclude_outlier_transitions);
    read(me, "npmi_epsilon", c.metrics.npmi_epsilon);

    const auto su = root["summaries"];
    check_keys(su, "summaries", {"max_sentences"});
    read(su, "max_sentences", c.summary_sentences);

    c.validate();
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    return parse_config(mvt::detail::read_file(path), path.parent_path());
}

inline void PipelineConfig::validate() const {
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (corpus_dir.empty() && videos.empty()) throw ConfigError("inputs: set corpus_dir or list videos");
    if (!corpus_dir.empty() && !videos.empty()) throw ConfigError("inputs: corpus_dir and videos are exclusive");
    fusion.validate();
    selection.validate();
    clustering.validate();
    diagnostics.params.validate();
    if (retry.attempts < 1) throw ConfigError("endpoints.retries must be >= 1");
    for (auto s : metrics.spaces)
        if (s == Modality::word) throw ConfigError("metrics.spaces: 'word' is not an embedding space");
    std::set<std::string> ids;
    for (const auto& v : videos) {
        if (!ids.insert(v.id).second) throw ConfigError("duplicate video id '" + v.id + "'");
        if (v.segments.empty()) throw ConfigError("video '" + v.id + "' has no segments file");
        for (auto m : mode_modalities(mode)) {
            const bool file = v.embeddings.count(m) || (m == Modality::visual && !v.frames.empty());
            const bool endpoint = endpoints.count(m) != 0;
            if (v.embeddings.count(m) && endpoint)
                throw ConfigError("video '" + v.id + "': " + std::string(to_string(m)) +
                                  " has both a file and an endpoint configured");
            if (!file && !endpoint)
                throw ConfigError("video '" + v.id + "': mode " + std::string(to_string(mode)) + " needs " +
                                  std::string(to_string(m)) + " embeddings");
            if (m == Modality::audio && endpoint && v.media.empty())
                throw ConfigError("video '" + v.id + "': the audio endpoint needs a media file");
        }
    }
}

/// Canonical form of the effective configuration; its FNV-1a digest is the config hash.
inline nlohmann::ordered_json PipelineConfig::to_json() const {
    nlohmann::ordered_json j;
    j["mode"] = std::string(to_string(mode));
    auto& in = j["inputs"];
    in["corpus_dir"] = corpus_dir.string();
    auto& vids = in["videos"] = nlohmann::ordered_json::array();
    for (const auto& v : videos) {
        nlohmann::ordered_json vj;
        vj["id"] = v.id;
        vj["segments"] = v.segments.string();
        for (const auto& [m, p] : v.embeddings) vj[std::string(to_string(m))] = p.string();
        vj["frames"] = v.frames.string();
        vj["media"] = v.media.string();
        vids.push_back(std::move(vj));
    }
    in["word_vectors"] = word_vectors.string();
    in["stopwords"] = stopwords.string();
    in["seed_topics"] = seed_topics;
    auto& ep = j["endpoints"] = nlohmann::ordered_json::object();
    for (const auto& [m, url] : endpoints) ep[std::string(to_string(m))] = url;
    ep["retries"] = retry.attempts;
    j["fusion"]["weights"] = {fusion.text, fusion.audio, fusion.visual};
    j["frame_selection"] = {{"k", selection.k},
                            {"alpha", selection.alpha},
                            {"min_candidates", selection.min_candidates},
                            {"lambda_center", selection.lambda_center},
                            {"lambda_sharpness", selection.lambda_sharpness},
                            {"nu", selection.nu},
                            {"dedup_threshold", selection.dedup_threshold},
                            {"frame_duration", selection.frame_duration}};
    j["clustering"] = detail::cluster_json(clustering);
    j["diagnostics"] = detail::cluster_json(diagnostics.params);
    j["diagnostics"]["enabled"] = diagnostics.enabled;
    auto& me = j["metrics"];
    me["spaces"] = nlohmann::ordered_json::array();
    for (auto s : metrics.spaces) me["spaces"].push_back(std::string(to_string(s)));
    me["exclude_outlier_transitions"] = metrics.exclude_outlier_transitions;
    me["npmi_epsilon"] = metrics.npmi_epsilon;
    j["summaries"]["max_sentences"] = summary_sentences;
    return j;
}

}  // namespace mvt
