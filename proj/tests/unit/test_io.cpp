// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <filesystem>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "mvtopic/config.hpp"
#include "mvtopic/corpus.hpp"
#include "mvtopic/encoder_client.hpp"
#include "mvtopic/image_io.hpp"
#include "mvtopic/text.hpp"
#include "mvtopic/wordvec.hpp"
#include "stub_encoder.hpp"

namespace fs = std::filesystem;
using namespace mvt;
using mvt::test_support::StubEncoder;

namespace {

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("mvtopic_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

EmbeddingMatrix matrix(std::size_t rows, std::size_t dims, Modality m = Modality::text, float base = 0.0f) {
    EmbeddingMatrix e;
    e.modality = m;
    e.source = "fixture";
    e.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dims));
    for (Eigen::Index r = 0; r < e.data.rows(); ++r)
        for (Eigen::Index c = 0; c < e.data.cols(); ++c) e.data(r, c) = base + static_cast<float>(r) - 0.25f * c;
    return e;
}

}  // namespace

// ---- segments -------------------------------------------------------------------

TEST(Segments, ParsesTwoRecords) {
    auto s = parse_segments("{\"start\":0.0,\"end\":4.2,\"text\":\"guten abend\"}\n"
                            "{\"start\":4.2,\"end\":9.0,\"text\":\"zur lage\"}\n",
                            "v");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].index, 0u);
    EXPECT_EQ(s[1].index, 1u);
    EXPECT_EQ(s[0].text, "guten abend");
    EXPECT_DOUBLE_EQ(s[1].t_end, 9.0);
    EXPECT_EQ(s[1].video_id, "v");
}

TEST(Segments, SortsAndReindexes) {
    auto s = parse_segments("{\"start\":4.2,\"end\":9.0,\"text\":\"b\"}\n{\"start\":0,\"end\":4.2,\"text\":\"a\"}", "v");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].text, "a");
    EXPECT_EQ(s[0].index, 0u);
    EXPECT_EQ(s[1].text, "b");
    EXPECT_EQ(s[1].index, 1u);
}

TEST(Segments, TieOnStartOrdersByEnd) {
    auto s = parse_segments("{\"start\":1,\"end\":5,\"text\":\"long\"}\n{\"start\":1,\"end\":2,\"text\":\"short\"}", "v");
    EXPECT_EQ(s[0].text, "short");
}

TEST(Segments, EndNotAfterStartIsValidationError) {
    EXPECT_THROW(parse_segments("{\"start\":3,\"end\":3,\"text\":\"x\"}", "v"), ValidationError);
}

TEST(Segments, MalformedLineReportsLineNumber) {
    try {
        parse_segments("{\"start\":0,\"end\":1,\"text\":\"ok\"}\n{not json\n", "v");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Segments, EmptyTextIsLegal) {
    auto s = parse_segments("{\"start\":0,\"end\":1,\"text\":\"\"}", "v");
    ASSERT_EQ(s.size(), 1u);
    EXPECT_TRUE(s[0].text.empty());
}

TEST(Segments, OverlapWarns) {
    Diagnostics diag;
    auto s = parse_segments("{\"start\":0,\"end\":5,\"text\":\"a\"}\n{\"start\":4,\"end\":6,\"text\":\"b\"}", "v", &diag);
    EXPECT_EQ(s.size(), 2u);
    ASSERT_EQ(diag.warnings().size(), 1u);
    EXPECT_NE(diag.warnings()[0].find("overlap"), std::string::npos);
}

TEST(Segments, LoadingIsIdempotent) {
    const auto first = parse_segments("{\"start\":2,\"end\":3,\"text\":\"b\"}\n{\"start\":0,\"end\":1,\"text\":\"a\"}", "v");
    const auto second = parse_segments(format_segments(first), "v");
    EXPECT_EQ(format_segments(first), format_segments(second));
}

// ---- EMB1 -----------------------------------------------------------------------

TEST(Emb1, HeaderAndPayloadLayout) {
    auto m = matrix(3, 4);
    const auto bytes = encode_emb1(m);
    const auto nl = bytes.find('\n');
    EXPECT_EQ(bytes.substr(0, nl),
              "{\"magic\":\"EMB1\",\"count\":3,\"dims\":4,\"dtype\":\"f32le\",\"modality\":\"text\",\"source\":\"fixture\"}");
    EXPECT_EQ(bytes.size() - nl - 1, 48u);
    auto back = decode_emb1(bytes);
    EXPECT_EQ(back.rows(), 3u);
    EXPECT_EQ(back.dims(), 4u);
    EXPECT_TRUE(back.data.isApprox(m.data));
}

TEST(Emb1, LittleEndianFloats) {
    EmbeddingMatrix m;
    m.data.resize(1, 1);
    m.data(0, 0) = 1.0f;  // 0x3f800000
    const auto bytes = encode_emb1(m);
    const auto payload = bytes.substr(bytes.find('\n') + 1);
    ASSERT_EQ(payload.size(), 4u);
    EXPECT_EQ(static_cast<unsigned char>(payload[0]), 0x00);
    EXPECT_EQ(static_cast<unsigned char>(payload[3]), 0x3f);
}

TEST(Emb1, RoundTripIsByteIdentical) {
    auto dir = temp_dir("emb1");
    auto m = matrix(5, 3, Modality::audio);
    m.extra_header["errors"] = nlohmann::ordered_json::array({"item 2: decode failed"});
    write_embeddings(dir / "a.emb", m);
    const auto original = detail::read_file(dir / "a.emb");
    write_embeddings(dir / "b.emb", load_embeddings(dir / "a.emb", 5));
    EXPECT_EQ(original, detail::read_file(dir / "b.emb"));
}

TEST(Emb1, RowMismatchIsAlignmentError) {
    auto dir = temp_dir("emb1_rows");
    write_embeddings(dir / "a.emb", matrix(3, 4));
    try {
        load_embeddings(dir / "a.emb", 5);
        FAIL() << "expected AlignmentError";
    } catch (const AlignmentError& e) {
        EXPECT_EQ(e.expected(), 5u);
        EXPECT_EQ(e.found(), 3u);
    }
}

TEST(Emb1, InfIsDataErrorAtRow) {
    auto m = matrix(3, 2);
    m.data(2, 1) = std::numeric_limits<float>::infinity();
    try {
        decode_emb1(encode_emb1(m));
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_EQ(e.row(), 2u);
    }
}

TEST(Emb1, TruncatedPayloadIsParseError) {
    auto bytes = encode_emb1(matrix(2, 2));
    bytes.pop_back();
    EXPECT_THROW(decode_emb1(bytes), ParseError);
}

TEST(Emb1, CsvFallback) {
    auto dir = temp_dir("csv");
    detail::write_file(dir / "v.csv", "0.5,1\n-2,3e-1\n");
    auto m = load_embeddings(dir / "v.csv", 2, Modality::visual);
    EXPECT_EQ(m.modality, Modality::visual);
    EXPECT_FLOAT_EQ(m.data(1, 1), 0.3f);
    detail::write_file(dir / "bad.csv", "1,2\n3\n");
    EXPECT_THROW(load_embeddings(dir / "bad.csv", 2), ParseError);
    detail::write_file(dir / "nan.csv", "1,2\nnan,3\n");
    EXPECT_THROW(load_embeddings(dir / "nan.csv", 2), DataError);
}

// ---- corpus ---------------------------------------------------------------------

TEST(Corpus, AttachRetrieveReplace) {
    VideoCorpus c("v", parse_segments("{\"start\":0,\"end\":1,\"text\":\"a\"}\n{\"start\":1,\"end\":2,\"text\":\"b\"}", "v"));
    c.attach(matrix(2, 3, Modality::text));
    c.attach(matrix(2, 4, Modality::audio));
    EXPECT_EQ(c.matrix(Modality::text).dims(), 3u);
    EXPECT_EQ(c.matrix(Modality::audio).dims(), 4u);
    c = attach(std::move(c), matrix(2, 5, Modality::text));
    EXPECT_EQ(c.matrix(Modality::text).dims(), 5u);
    EXPECT_THROW(c.attach(matrix(1, 3, Modality::visual)), AlignmentError);
    EXPECT_THROW(c.matrix(Modality::visual), ConfigError);
    c.attach(matrix(7, 3, Modality::word));  // word tables are not row-aligned
}

// ---- text -----------------------------------------------------------------------

TEST(Text, TokenizeLowercasesUnicode) {
    auto t = text::tokenize("Größe ÜBER Straße, a ÉTÉ 42");
    std::vector<std::string> expected{"größe", "über", "straße", "été", "42"};
    EXPECT_EQ(t, expected);
}

TEST(Text, StopwordsFile) {
    auto dir = temp_dir("stop");
    detail::write_file(dir / "s.txt", "# comment\nDie\nder\n\n");
    auto s = text::load_stopwords(dir / "s.txt");
    EXPECT_TRUE(s.count("die"));
    EXPECT_TRUE(s.count("der"));
    EXPECT_EQ(s.size(), 2u);
}

// ---- word vectors ---------------------------------------------------------------

TEST(WordVectors, ParseAndLookup) {
    std::istringstream in("Human 1 0\nrights 0 1\n");
    auto t = parse_word_vectors(in);
    EXPECT_EQ(t.size(), 2u);
    EXPECT_EQ(t.dims(), 2u);
    ASSERT_TRUE(t.find("human"));
    auto phrase = t.lookup_phrase("human rights");
    ASSERT_TRUE(phrase);
    EXPECT_DOUBLE_EQ((*phrase)(0), 0.5);
    std::istringstream bad("a 1 2\nb 1\n");
    EXPECT_THROW(parse_word_vectors(bad), Error);
}

// ---- config ---------------------------------------------------------------------

TEST(Config, DefaultsMirrorReferenceSettings) {
    auto c = parse_config("inputs:\n  corpus_dir: data\n");
    EXPECT_EQ(c.mode, Mode::full);
    EXPECT_DOUBLE_EQ(c.fusion.text, 0.34);
    EXPECT_DOUBLE_EQ(c.fusion.audio, 0.33);
    EXPECT_DOUBLE_EQ(c.fusion.visual, 0.33);
    EXPECT_EQ(c.clustering.min_cluster_size, 5u);
    EXPECT_EQ(c.clustering.reducer_components, 8u);
    EXPECT_EQ(c.clustering.reducer_neighbors, 15u);
    EXPECT_DOUBLE_EQ(c.clustering.merge_threshold, 0.70);
    EXPECT_EQ(c.selection.k, 5u);
    EXPECT_EQ(c.selection.alpha, 4u);
    EXPECT_EQ(c.selection.min_candidates, 8u);
    EXPECT_DOUBLE_EQ(c.selection.lambda_center, 0.7);
    EXPECT_DOUBLE_EQ(c.selection.lambda_sharpness, 0.3);
    EXPECT_DOUBLE_EQ(c.selection.dedup_threshold, 0.96);
}

TEST(Config, ParsesSections) {
    auto c = parse_config(R"(
mode: text_visual
workers: 3
inputs:
  videos:
    - id: a
      segments: a/segments.jsonl
      text: a/text.emb
      visual: a/visual.emb
fusion:
  weights: [0.5, 0.25, 0.25]
clustering:
  min_cluster_size: 7
  merge_threshold: 0.8
diagnostics:
  enabled: true
  min_cluster_size: 4
metrics:
  spaces: [visual, fused]
  exclude_outlier_transitions: true
)",
                          "/base");
    EXPECT_EQ(c.mode, Mode::text_visual);
    EXPECT_EQ(c.workers, 3u);
    ASSERT_EQ(c.videos.size(), 1u);
    EXPECT_EQ(c.videos[0].segments, fs::path("/base/a/segments.jsonl"));
    EXPECT_DOUBLE_EQ(c.fusion.text, 0.5);
    EXPECT_EQ(c.clustering.min_cluster_size, 7u);
    EXPECT_TRUE(c.diagnostics.enabled);
    EXPECT_EQ(c.diagnostics.params.min_cluster_size, 4u);
    EXPECT_EQ(c.metrics.spaces.size(), 2u);
    EXPECT_TRUE(c.metrics.exclude_outlier_transitions);
}

TEST(Config, UnknownKeysFail) {
    EXPECT_THROW(parse_config("inputs:\n  corpus_dir: d\nbogus: 1\n"), ConfigError);
    EXPECT_THROW(parse_config("inputs:\n  corpus_dir: d\nclustering:\n  min_topic_size: 5\n"), ConfigError);
    EXPECT_THROW(parse_config("inputs:\n  corpus_dir: d\nclustering:\n  enabled: true\n"), ConfigError);
}

TEST(Config, ModeRequiresModalities) {
    const std::string base = "inputs:\n  videos:\n    - id: a\n      segments: s.jsonl\n      text: t.emb\n";
    EXPECT_NO_THROW(parse_config("mode: text_only\n" + base));
    EXPECT_THROW(parse_config("mode: full\n" + base), ConfigError);
    EXPECT_NO_THROW(parse_config("mode: text_audio\n" + base + "      media: m.wav\nendpoints:\n  audio: http://h:1\n"));
    EXPECT_THROW(parse_config("mode: text_only\n" + base + "endpoints:\n  text: http://h:1\n"), ConfigError);
    EXPECT_THROW(parse_config("mode: sideways\n" + base), ConfigError);
}

TEST(Config, HashTracksEffectiveSettings) {
    auto a = parse_config("inputs:\n  corpus_dir: d\n");
    auto b = parse_config("inputs:\n  corpus_dir: d\nclustering:\n  min_cluster_size: 5\n");
    auto c = parse_config("inputs:\n  corpus_dir: d\nclustering:\n  min_cluster_size: 6\n");
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_NE(a.hash(), c.hash());
    EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Config, Fnv1aKnownVectors) {
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ull);
}

// ---- encoder client -------------------------------------------------------------

namespace {

std::vector<Segment> three_segments() {
    return parse_segments("{\"start\":0,\"end\":1,\"text\":\"a\"}\n{\"start\":1,\"end\":2,\"text\":\"b\"}\n"
                          "{\"start\":2,\"end\":3,\"text\":\"c\"}",
                          "v");
}

encoder::RetryPolicy fast_policy() {
    encoder::RetryPolicy p;
    p.initial_backoff = std::chrono::milliseconds(1);
    p.timeout = std::chrono::seconds(5);
    return p;
}

}  // namespace

TEST(EncoderClient, RequestJsonShape) {
    auto r = encoder::audio_request(three_segments(), "clip.wav");
    auto j = r.to_json();
    EXPECT_EQ(j["modality"], "audio");
    ASSERT_EQ(j["items"].size(), 3u);
    EXPECT_EQ(j["items"][1]["file"], "clip.wav");
    EXPECT_DOUBLE_EQ(j["items"][1]["start"].get<double>(), 1.0);
    EXPECT_EQ(encoder::text_request(three_segments()).to_json()["items"][2], "c");
    EXPECT_EQ(encoder::visual_request({"f.png"}).to_json()["modality"], "visual");
}

TEST(EncoderClient, FetchesAlignedMatrix) {
    StubEncoder stub;
    auto m = encoder::fetch_embeddings(stub.url("text"), encoder::text_request(three_segments()), fast_policy());
    EXPECT_EQ(m.rows(), 3u);
    EXPECT_EQ(m.dims(), 3u);
    EXPECT_EQ(m.source, "stub");
    EXPECT_FLOAT_EQ(m.data(2, 1), 7.0f);
    EXPECT_EQ(stub.last_modality(), "text");
    VideoCorpus c("v", three_segments());
    c.attach(m);
    EXPECT_TRUE(c.has(Modality::text));
}

TEST(EncoderClient, ShortReplyIsAlignmentErrorWithoutRetry) {
    StubEncoder stub(-1);
    std::size_t attempts = 0;
    EXPECT_THROW(encoder::fetch_embeddings(stub.url("text"), encoder::text_request(three_segments()), fast_policy(),
                                           &attempts),
                 AlignmentError);
    EXPECT_EQ(attempts, 1u);
    EXPECT_EQ(stub.hits(), 1);
}

TEST(EncoderClient, RetriesTransientFailures) {
    StubEncoder stub(0, 2);
    std::size_t attempts = 0;
    auto m = encoder::fetch_embeddings(stub.url("visual"), encoder::visual_request({"a", "b"}), fast_policy(), &attempts);
    EXPECT_EQ(attempts, 3u);
    EXPECT_EQ(m.rows(), 2u);
    EXPECT_EQ(m.modality, Modality::visual);
}

TEST(EncoderClient, DownEndpointGivesStageErrorAfterThreeAttempts) {
    int port;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    std::size_t attempts = 0;
    auto policy = fast_policy();
    policy.timeout = std::chrono::seconds(1);
    EXPECT_THROW(encoder::fetch_embeddings("http://127.0.0.1:" + std::to_string(port) + "/embed/text",
                                           encoder::text_request(three_segments()), policy, &attempts),
                 StageError);
    EXPECT_EQ(attempts, 3u);
}

// ---- images ---------------------------------------------------------------------

TEST(ImageIo, PngRoundTripKeepsChannelOrder) {
    auto dir = temp_dir("img");
    frames::Raster r;
    r.width = 3;
    r.height = 2;
    r.rgb = {255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 20, 30, 40, 50, 60, 70, 80, 90};
    frames::save_raster(r, dir / "x.png");
    auto back = frames::load_raster(dir / "x.png");
    EXPECT_EQ(back.width, 3u);
    EXPECT_EQ(back.height, 2u);
    EXPECT_EQ(back.rgb, r.rgb);
    EXPECT_THROW(frames::load_raster(dir / "missing.png"), InputError);
}
