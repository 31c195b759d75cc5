// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

// mvtopic command-line tool: run, synth, metrics, candidates.

#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mvtopic/mvtopic.hpp"

namespace {

mvt::synth::Informativeness parse_inform(const std::string& spec) {
    mvt::synth::Informativeness inf;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw mvt::ConfigError("--inform expects modality=value pairs, got '" + item + "'");
        const auto key = item.substr(0, eq);
        const double value = std::stod(item.substr(eq + 1));
        if (key == "text") inf.text = value;
        else if (key == "audio") inf.audio = value;
        else if (key == "visual") inf.visual = value;
        else throw mvt::ConfigError("--inform: unknown modality '" + key + "'");
    }
    return inf;
}

std::vector<int> read_labels(const std::string& path) {
    const auto j = nlohmann::json::parse(mvt::detail::read_file(path));
    if (j.is_array()) return j.get<std::vector<int>>();
    if (j.contains("labels")) return j.at("labels").get<std::vector<int>>();
    throw mvt::InputError(path + ": expected a label array or an object with 'labels'");
}

int cmd_run(const std::string& config, const std::string& mode, const std::string& out, std::size_t workers) {
    auto cfg = mvt::load_config(config);
    if (!mode.empty()) cfg.mode = mvt::parse_mode(mode);
    if (!out.empty()) cfg.output_dir = out;
    if (workers) cfg.workers = workers;
    const auto run = mvt::pipeline::run(cfg);
    for (const auto& v : run.videos) {
        if (v.ok)
            std::printf("%-24s ok      topics=%zu\n", v.video_id.c_str(), v.model.topics.size());
        else
            std::printf("%-24s FAILED  %s\n", v.video_id.c_str(), v.error.c_str());
    }
    auto mean = [&](const char* key) {
        auto it = run.aggregate.find(key);
        return it != run.aggregate.end() && it->second.mean ? *it->second.mean : 0.0;
    };
    std::printf("mode %s: %zu videos, %zu failed, noise %.4f, transition %.4f -> %s\n",
                std::string(mvt::to_string(cfg.mode)).c_str(), run.videos.size(), run.failed, mean("noise_ratio"),
                mean("transition_rate"), cfg.output_dir.string().c_str());
    return run.failed == 0 ? 0 : 1;
}

int cmd_synth(std::uint64_t seed, std::size_t videos, std::size_t segments, std::size_t topics,
              const std::string& inform, double noise, const std::string& out) {
    auto spec = mvt::synth::ablation_spec(seed);
    spec.n_videos = videos;
    spec.segments_per_video = segments;
    spec.n_topics = topics;
    if (!inform.empty()) spec.inform = parse_inform(inform);
    if (noise >= 0.0) spec.noise = noise;
    const auto corpus = mvt::synth::make_synthetic_corpus(spec);
    mvt::synth::write_synthetic_corpus(corpus, out);
    std::printf("wrote %zu videos to %s (config: %s/config.yaml)\n", videos, out.c_str(), out.c_str());
    return 0;
}

int cmd_metrics(const std::string& labels_path, const std::string& emb_path, const std::string& space) {
    const auto labels = read_labels(labels_path);
    const auto m = mvt::load_embeddings(emb_path, labels.size());
    const auto modality = mvt::parse_modality(space);
    const Eigen::MatrixXd X = m.data.cast<double>();
    const auto s = mvt::metrics::structure_metrics(labels);
    nlohmann::ordered_json j;
    j["space"] = space;
    j["noise_ratio"] = s.noise_ratio;
    j["transition_rate"] = s.transition_rate;
    j["entropy_norm"] = s.entropy_norm;
    j["gini"] = s.gini;
    j["n_topics"] = s.n_topics;
    const auto v = mvt::metrics::cluster_validity(X, labels, modality);
    j["ch"] = v ? nlohmann::ordered_json(v->ch) : nlohmann::ordered_json(nullptr);
    j["silhouette"] = v ? nlohmann::ordered_json(v->silhouette) : nlohmann::ordered_json(nullptr);
    j["db"] = v ? nlohmann::ordered_json(v->db) : nlohmann::ordered_json(nullptr);
    if (v && v->degenerate) j["degenerate"] = true;
    const auto iec = mvt::metrics::iec(X, labels);
    j["iec"] = iec ? nlohmann::ordered_json(*iec) : nlohmann::ordered_json(nullptr);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_candidates(double start, double end) {
    mvt::Diagnostics diag;
    for (double t : mvt::frames::candidate_timestamps(start, end, {}, &diag)) std::printf("%.6f\n", t);
    for (const auto& w : diag.warnings()) std::fprintf(stderr, "warning: %s\n", w.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mvtopic: multimodal topic discovery for segmented video"};
    app.set_version_flag("--version", std::string(mvt::pipeline::kVersion));
    app.require_subcommand(1);

    std::string config, mode, out;
    std::size_t workers = 0;
    auto* run = app.add_subcommand("run", "Run the pipeline from a YAML config");
    run->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("--mode", mode, "text_only|text_audio|text_visual|full")
        ->check(CLI::IsMember({"text_only", "text_audio", "text_visual", "full"}));
    run->add_option("--out", out, "Output directory");
    run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

    std::uint64_t seed = 1;
    std::size_t videos = 10, segments = 60, topics = 4;
    std::string inform, synth_out = "synthetic";
    double noise = -1.0;
    auto* synth = app.add_subcommand("synth", "Write a planted-topic synthetic corpus");
    synth->add_option("--seed", seed, "RNG seed");
    synth->add_option("--videos", videos, "Number of videos")->check(CLI::PositiveNumber);
    synth->add_option("--segments", segments, "Segments per video")->check(CLI::PositiveNumber);
    synth->add_option("--topics", topics, "Planted topics")->check(CLI::PositiveNumber);
    synth->add_option("--inform", inform, "Informativeness, e.g. text=0.12,audio=0.5,visual=1");
    synth->add_option("--noise", noise, "Noise level (default 0.2)");
    synth->add_option("--out", synth_out, "Output directory");

    std::string labels, embeddings, space = "fused";
    auto* met = app.add_subcommand("metrics", "Score a labelling against an embedding matrix");
    met->add_option("--labels", labels, "Label JSON (array or topics.json)")->required()->check(CLI::ExistingFile);
    met->add_option("--embeddings", embeddings, "EMB1 or CSV matrix")->required()->check(CLI::ExistingFile);
    met->add_option("--space", space, "Space name")->check(CLI::IsMember({"text", "audio", "visual", "fused"}));

    double start = 0.0, end = 0.0;
    auto* cand = app.add_subcommand("candidates", "Print candidate frame timestamps for a span");
    cand->add_option("--start", start, "Span start (s)")->required();
    cand->add_option("--end", end, "Span end (s)")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(config, mode, out, workers);
        if (*synth) return cmd_synth(seed, videos, segments, topics, inform, noise, synth_out);
        if (*met) return cmd_metrics(labels, embeddings, space);
        if (*cand) return cmd_candidates(start, end);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
