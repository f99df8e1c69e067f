// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

#include "latsteer/bias_report.hpp"
#include "latsteer/similarity.hpp"

using namespace latsteer;
namespace fs = std::filesystem;

namespace {

const fs::path kData = LATSTEER_TEST_DATA;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ProviderSet stub_providers() {
  return {std::make_shared<StubTextEmbedder>(), std::make_shared<StubImageEmbedder>(),
          std::make_shared<StubDetector>()};
}

std::vector<RankedAttribute> brute_force(std::span<const double> q,
                                         const std::map<std::string, std::vector<double>>& vocab, std::size_t k) {
  std::vector<RankedAttribute> all;
  for (const auto& [name, v] : vocab) {
    double dot = 0, nq = 0, nv = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      dot += q[j] * v[j];
      nq += q[j] * q[j];
      nv += v[j] * v[j];
    }
    all.push_back({name, std::clamp(dot / (std::sqrt(nq) * std::sqrt(nv)), -1.0, 1.0)});
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.cosine != b.cosine ? a.cosine > b.cosine : a.name < b.name;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

class ThrowingDetector final : public Detector {
 public:
  std::string id() const override { return "broken"; }
  std::vector<std::string> detect(const ImageInput&) override { throw std::runtime_error("detector offline"); }
};

}  // namespace

TEST(Cosine, Examples) {
  const std::vector<double> v = {1, -2, 3};
  const std::vector<double> neg = {-1, 2, -3};
  EXPECT_DOUBLE_EQ(cosine_similarity(v, v), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(v, neg), -1.0);
  EXPECT_EQ(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_THROW(cosine_similarity(v, std::vector<double>{0, 0, 0}), Error);
  EXPECT_THROW(cosine_similarity(v, std::vector<double>{1, 2}), Error);
}

TEST(RankAttributes, SelfFirst) {
  const std::vector<double> c = {1, 0};
  const auto r = rank_attributes(c, {{"a", {1, 0}}, {"b", {0, 1}}}, 1);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].name, "a");
  EXPECT_DOUBLE_EQ(r[0].cosine, 1.0);
}

TEST(RankAttributes, KBeyondVocabularyAndTies) {
  const std::vector<double> c = {1, 0};
  const auto r = rank_attributes(c, {{"z", {1, 1}}, {"a", {1, 1}}, {"m", {-1, 0}}}, 10);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].name, "a");
  EXPECT_EQ(r[1].name, "z");
  EXPECT_EQ(r[2].name, "m");
}

TEST(RankAttributes, DimensionMismatchNamesAttribute) {
  const std::vector<double> c = {1, 0};
  try {
    rank_attributes(c, {{"ok", {1, 0}}, {"wrong", {1, 0, 0}}}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("wrong"), std::string::npos);
  }
  EXPECT_THROW(rank_attributes(c, {{"ok", {1, 0}}}, 0), Error);
}

TEST(RankAttributes, MatchesExhaustiveSort) {
  std::mt19937_64 gen(50);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 20; ++t) {
    std::map<std::string, std::vector<double>> vocab;
    for (int a = 0; a < 50; ++a) {
      std::vector<double> v(8);
      for (auto& x : v) x = nd(gen);
      vocab["attr" + std::to_string(a)] = v;
    }
    vocab["dup"] = vocab["attr3"];
    std::vector<double> q(8);
    for (auto& x : q) x = nd(gen);
    for (std::size_t k : {1u, 15u, 51u, 100u}) EXPECT_EQ(rank_attributes(q, vocab, k), brute_force(q, vocab, k));
  }
}

TEST(TallyDetections, Examples) {
  EXPECT_TRUE(tally_detections({}).empty());
  EXPECT_EQ(tally_detections({{"suit"}, {"suit"}, {"suit"}}), (FrequencyMap{{"suit", 3}}));
  EXPECT_EQ(tally_detections({{"suit", "suit", "house"}}), (FrequencyMap{{"house", 1}, {"suit", 1}}));
}

TEST(Inputs, ListAndReadFiles) {
  const auto refs = list_image_refs(kData / "report_images");
  ASSERT_EQ(refs.size(), 6u);
  EXPECT_TRUE(std::is_sorted(refs.begin(), refs.end()));
  for (const auto& r : refs) EXPECT_EQ(fs::path(r).extension(), ".png");
  const auto attrs = read_attribute_file(kData / "attributes.txt");
  EXPECT_EQ(attrs.size(), 20u);
  for (const auto& a : attrs) {
    EXPECT_FALSE(a.empty());
    EXPECT_NE(a[0], '#');
  }
}

TEST(BuildReport, GoldenFile) {
  const auto refs = list_image_refs(kData / "report_images");
  const auto attrs = read_attribute_file(kData / "attributes.txt");
  const auto a = canonical_report_text(build_report("doctor", attrs, refs, stub_providers()));
  const auto b = canonical_report_text(build_report("doctor", attrs, refs, stub_providers()));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, slurp(kData / "golden_report.json"));
}

TEST(BuildReport, FixtureContent) {
  const auto refs = list_image_refs(kData / "report_images");
  const auto attrs = read_attribute_file(kData / "attributes.txt");
  BiasReportOptions opts;
  opts.per_image = true;
  const auto doc = build_report("doctor", attrs, refs, stub_providers(), opts);
  EXPECT_EQ(doc.n_images, 6u);
  EXPECT_EQ(doc.top_attributes_text.size(), 15u);
  EXPECT_EQ(doc.top_attributes_vision.size(), 15u);
  EXPECT_EQ(doc.per_image_vision.size(), 6u);
  // "suit" appears twice in one image's sidecar but counts once there.
  std::size_t suit_images = 0;
  for (const auto& r : refs) {
    const auto text = slurp(r + ".detections");
    if (text.find("suit") != std::string::npos) ++suit_images;
  }
  EXPECT_EQ(doc.detection_frequencies.at("suit"), suit_images);
  for (const auto& [cat, tally] : doc.social_tallies) {
    std::size_t total = 0;
    for (const auto& [label, n] : tally) total += n;
    EXPECT_EQ(total, doc.n_images) << cat;
  }
  EXPECT_EQ(report_from_json(report_to_json(doc)), doc);
}

TEST(BuildReport, HundredSyntheticImages) {
  const fs::path dir = fs::temp_directory_path() / ("latsteer_report_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::vector<std::string> objects = {"suit", "tie", "stethoscope", "window", "chair", "plant"};
  std::mt19937_64 gen(100);
  FrequencyMap expect;
  for (int i = 0; i < 100; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "gen_%03d.png", i);
    const fs::path img = dir / name;
    std::ofstream(img) << "image " << i;
    std::ofstream(img.string() + ".caption") << (i % 3 == 0 ? "a woman doctor" : "a man doctor in a suit");
    std::ofstream det(img.string() + ".detections");
    std::set<std::string> seen;
    for (int d = 0; d < 4; ++d) {
      const auto& o = objects[gen() % objects.size()];
      det << o << "\n";
      seen.insert(o);
    }
    for (const auto& o : seen) ++expect[o];
  }
  std::vector<std::string> vocab;
  for (int a = 0; a < 50; ++a) vocab.push_back("attribute " + std::to_string(a));
  const auto doc = build_report("doctor", vocab, list_image_refs(dir), stub_providers());
  fs::remove_all(dir);
  EXPECT_EQ(doc.n_images, 100u);
  EXPECT_LE(doc.top_attributes_text.size(), 15u);
  EXPECT_LE(doc.top_attributes_vision.size(), 15u);
  EXPECT_EQ(doc.detection_frequencies, expect);
  for (const auto& list : {doc.top_attributes_text, doc.top_attributes_vision}) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      EXPECT_GE(list[i].cosine, -1.0);
      EXPECT_LE(list[i].cosine, 1.0);
      if (i > 0) EXPECT_GE(list[i - 1].cosine, list[i].cosine);
    }
  }
  ASSERT_EQ(doc.social_tallies.size(), 2u);
  for (const auto& [cat, tally] : doc.social_tallies) {
    std::size_t total = 0;
    for (const auto& [label, n] : tally) total += n;
    EXPECT_EQ(total, 100u) << cat;
  }
}

TEST(BuildReport, ProviderFailureMarksPanel) {
  const auto refs = list_image_refs(kData / "report_images");
  auto providers = stub_providers();
  providers.detector = std::make_shared<ThrowingDetector>();
  const auto doc = build_report("doctor", {"suit", "coat"}, refs, providers);
  EXPECT_FALSE(doc.detection_panel.available);
  EXPECT_NE(doc.detection_panel.error.find("detector offline"), std::string::npos);
  EXPECT_TRUE(doc.detection_frequencies.empty());
  EXPECT_TRUE(doc.text_panel.available);
  EXPECT_TRUE(doc.vision_panel.available);
  EXPECT_EQ(doc.top_attributes_text.size(), 2u);

  providers.text.reset();
  const auto doc2 = build_report("doctor", {"suit"}, refs, providers);
  EXPECT_FALSE(doc2.text_panel.available);
  EXPECT_FALSE(doc2.vision_panel.available);
  EXPECT_FALSE(doc2.social_panel.available);
}
