// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "latsteer/store.hpp"
#include "latsteer/tensor_io.hpp"
#include "random_artifacts.hpp"

using namespace latsteer;
using latsteer::testing::ArtifactFactory;
using latsteer::testing::same_direction;
namespace fs = std::filesystem;

namespace {

const fs::path kData = LATSTEER_TEST_DATA;

class StoreTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("latsteer_store_" + std::to_string(::getpid()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  ErrorCode code_of(const std::function<void()>& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::kInvalidArgument;
  }

  fs::path root_;
};

}  // namespace

TEST(TensorIo, RoundTrip) {
  ArtifactFactory f(1);
  for (int i = 0; i < 50; ++i) {
    const auto t = f.tensor(f.shape());
    EXPECT_EQ(tensor_io::decode(tensor_io::encode(t)), t);
  }
  const LatentTensor neg_zero({-0.0f}, {1});
  EXPECT_TRUE(std::signbit(tensor_io::decode(tensor_io::encode(neg_zero))[0]));
}

TEST(TensorIo, GoldenFile) {
  const std::string bytes = tensor_io::read_file(kData / "golden_tensor.lstr");
  EXPECT_EQ(bytes.size(), 41u);
  EXPECT_EQ(tensor_io::sha256_hex(bytes), "48dea0e20be9ef23d0b94e5923f903d6cad51f604f6fcdd156f01b5f58dce7cb");
  const auto t = tensor_io::decode(bytes);
  EXPECT_EQ(t, LatentTensor({0.0f, -1.5f, 3.25f, 1e-3f, -0.0f, 65504.0f}, {2, 3}));
  EXPECT_EQ(tensor_io::encode(t), bytes);
}

TEST(TensorIo, MalformedInput) {
  const std::string good = tensor_io::encode(LatentTensor({1.0f, 2.0f}, {2}));
  auto code = [](std::string_view b) {
    try {
      tensor_io::decode(b);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code(good.substr(0, good.size() - 1)), ErrorCode::kTruncated);
  EXPECT_EQ(code(good.substr(0, 3)), ErrorCode::kTruncated);
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_EQ(code(bad), ErrorCode::kBadMagic);
  bad = good;
  bad[4] = 2;
  EXPECT_EQ(code(bad), ErrorCode::kBadVersion);
  EXPECT_EQ(code(good + "x"), ErrorCode::kCorruption);
}

TEST_F(StoreTest, DirectionRoundTrip) {
  ArtifactFactory f(2);
  const auto d = f.direction();
  const auto id = save_direction(d, root_ / "d");
  EXPECT_TRUE(same_direction(load_direction(root_ / "d"), d));
  EXPECT_EQ(id.size(), 64u);
}

TEST_F(StoreTest, TamperedPayloadIsCorruption) {
  ArtifactFactory f(3);
  save_direction(f.direction(), root_ / "d");
  {
    std::fstream io(root_ / "d" / "payload.lstr", std::ios::in | std::ios::out | std::ios::binary);
    io.seekp(-1, std::ios::end);
    io.put('\x7f');
  }
  EXPECT_EQ(code_of([&] { load_direction(root_ / "d"); }), ErrorCode::kCorruption);
}

TEST_F(StoreTest, MissingPayloadIsMissingRef) {
  ArtifactFactory f(4);
  save_direction(f.direction(), root_ / "d");
  fs::remove(root_ / "d" / "provenance.json");
  EXPECT_EQ(code_of([&] { load_direction(root_ / "d"); }), ErrorCode::kMissingRef);
}

TEST_F(StoreTest, NonUnitDirectionRejected) {
  ArtifactFactory f(5);
  auto d = f.direction();
  auto p = direction_payloads(d);
  for (auto& [name, bytes] : p) {
    if (name == "payload.lstr") bytes = tensor_io::encode(LatentTensor({0.5f, 0.5f}, {2}));
  }
  write_artifact(root_ / "d", ArtifactKind::kDirection, p, nlohmann::json::object());
  EXPECT_EQ(code_of([&] { load_direction(root_ / "d"); }), ErrorCode::kCorruption);
}

TEST_F(StoreTest, BadSchemaVersion) {
  ArtifactFactory f(6);
  save_direction(f.direction(), root_ / "d");
  auto j = nlohmann::json::parse(tensor_io::read_file(root_ / "d" / "manifest"));
  j["schema_version"] = 2;
  tensor_io::write_file_atomic(root_ / "d" / "manifest", j.dump());
  EXPECT_EQ(code_of([&] { load_direction(root_ / "d"); }), ErrorCode::kBadVersion);
}

TEST_F(StoreTest, AllKindsRoundTrip) {
  ArtifactStore store(root_);
  ArtifactFactory f(7);
  for (int i = 0; i < 20; ++i) {
    const auto d = f.direction();
    EXPECT_TRUE(same_direction(store.load_direction(store.save_direction(d)), d));
    const auto ds = f.dataset();
    EXPECT_EQ(store.load_dataset(store.save_dataset(ds)), ds);
    const auto tr = f.trajectory();
    EXPECT_EQ(store.load_trajectory(store.save_trajectory(tr)), tr);
    const auto sw = f.sweep();
    EXPECT_EQ(store.load_sweep(store.save_sweep(sw)), sw);
    const auto ev = f.evaluation();
    const auto ev_id = store.save_evaluation(ev);
    EXPECT_EQ(store.load_evaluation(ev_id), ev);
    EXPECT_EQ(store.report_type(ev_id), ReportType::kEvaluation);
    const auto br = f.bias_report();
    const auto br_id = store.save_bias_report(br);
    EXPECT_EQ(store.load_bias_report(br_id), br);
    EXPECT_EQ(store.report_type(br_id), ReportType::kBias);
    EXPECT_THROW(store.load_evaluation(br_id), Error);
  }
  EXPECT_EQ(store.list(ArtifactKind::kReport).size(), 40u);
}

TEST_F(StoreTest, IdTracksPayloadOnly) {
  ArtifactStore store(root_);
  ArtifactFactory f(8);
  auto d = f.direction();
  const auto a = store.save_direction(d);
  d.created_at += 100;
  EXPECT_EQ(store.save_direction(d), a);
  d.bias += 1.0;
  EXPECT_NE(store.save_direction(d), a);
  auto ds = f.dataset();
  const auto b = store.save_dataset(ds);
  ds.items.back().seed += 1000;
  EXPECT_NE(store.save_dataset(ds), b);
}

TEST_F(StoreTest, ExistingIdNeverOverwritten) {
  ArtifactStore store(root_);
  const Payloads p = {{"x.json", "{}"}};
  const auto id = store.put(ArtifactKind::kSweep, p, {{"note", "first"}});
  EXPECT_EQ(store.put(ArtifactKind::kSweep, p, {{"note", "second"}}), id);
  EXPECT_EQ(store.load(ArtifactKind::kSweep, id).manifest.metadata.at("note"), "first");
  EXPECT_TRUE(store.exists(ArtifactKind::kSweep, id));
  EXPECT_FALSE(store.exists(ArtifactKind::kSweep, std::string(64, '0')));
  EXPECT_EQ(code_of([&] { store.load(ArtifactKind::kSweep, std::string(64, '0')); }), ErrorCode::kNotFound);
  for (const auto& e : fs::directory_iterator(root_ / "artifacts" / "sweep")) {
    EXPECT_NE(e.path().filename().string().rfind(".tmp", 0), 0u);
  }
}

TEST_F(StoreTest, ListSortedById) {
  ArtifactStore store(root_);
  ArtifactFactory f(9);
  for (int i = 0; i < 5; ++i) store.save_trajectory(f.trajectory());
  const auto all = store.list(ArtifactKind::kTrajectory);
  ASSERT_EQ(all.size(), 5u);
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_LT(all[i - 1].id, all[i].id);
  EXPECT_TRUE(store.list(ArtifactKind::kDirection).empty());
}

TEST(Manifest, JsonRoundTrip) {
  ArtifactManifest m;
  m.kind = ArtifactKind::kDataset;
  m.id = std::string(64, 'a');
  m.metadata = {{"k", 1}};
  m.payload_refs = {"payload.lstr", "dataset.json"};
  const auto back = ArtifactManifest::from_json(m.to_json());
  EXPECT_EQ(back.kind, m.kind);
  EXPECT_EQ(back.id, m.id);
  EXPECT_EQ(back.metadata, m.metadata);
  EXPECT_EQ(back.payload_refs, m.payload_refs);
  EXPECT_EQ(m.to_json().at("schema_version"), 1);
}
