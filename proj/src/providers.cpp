// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/providers.hpp"

#include <cctype>
#include <filesystem>
#include <cmath>
#include <fstream>
#include <optional>

#include "latsteer/rng.hpp"
#include "latsteer/tensor_io.hpp"

namespace latsteer {

ImageInput image_input(const TrajectoryRecord& record) {
  return ImageInput{record.image_ref, record.final_sample};
}

std::vector<ImageInput> image_inputs(const std::vector<TrajectoryRecord>& records) {
  std::vector<ImageInput> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(image_input(r));
  return out;
}

namespace {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

void add_token(std::vector<double>& e, std::uint64_t key) {
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] += rng::standard_normal(key, 1, static_cast<std::uint32_t>(i));
  }
}

std::optional<std::string> read_sidecar(const std::string& ref, const char* suffix) {
  if (ref.empty()) return std::nullopt;
  std::ifstream in(ref + suffix, std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

std::vector<double> StubTextEmbedder::embed(const std::string& text) {
  std::vector<double> e(dim_, 0.0);
  auto tokens = tokenize(text);
  if (tokens.empty()) tokens.push_back("<empty>");
  for (const auto& t : tokens) add_token(e, rng::hash_string(t.data(), t.size()));
  return e;
}

std::vector<double> StubImageEmbedder::embed(const ImageInput& image) {
  if (auto caption = read_sidecar(image.ref, ".caption")) return text_.embed(*caption);
  std::vector<double> e(dim_, 0.0);
  if (!image.ref.empty()) {
    std::string bytes = image.ref;
    if (std::filesystem::is_regular_file(image.ref)) bytes = tensor_io::read_file(image.ref);
    add_token(e, rng::hash_string(bytes.data(), bytes.size()));
    return e;
  }
  if (image.tensor.empty()) throw Error(ErrorCode::kInvalidArgument, "image input is empty");
  const auto v = image.tensor.values();
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      e[i] += v[j] * rng::standard_normal(0x5eedULL + j, 2, static_cast<std::uint32_t>(i));
    }
  }
  return e;
}

std::vector<std::string> StubDetector::detect(const ImageInput& image) {
  std::vector<std::string> labels;
  auto text = read_sidecar(image.ref, ".detections");
  if (!text) return labels;
  std::size_t start = 0;
  while (start < text->size()) {
    auto end = text->find('\n', start);
    if (end == std::string::npos) end = text->size();
    std::string line = text->substr(start, end - start);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (!line.empty()) labels.push_back(std::move(line));
    start = end + 1;
  }
  return labels;
}

namespace {

wire::Message image_request(wire::OpCode op, const ImageInput& image) {
  nlohmann::json h = {{"ref", image.ref}};
  std::vector<std::string> blobs;
  if (!image.tensor.empty()) blobs.push_back(tensor_io::encode(image.tensor));
  return wire::request(op, std::move(h), std::move(blobs));
}

std::vector<double> checked_embedding(const wire::Message& resp, std::size_t dim) {
  wire::throw_if_error(resp);
  auto e = resp.header.at("embedding").get<std::vector<double>>();
  if (e.size() != dim) throw Error(ErrorCode::kProtocol, "embedding length differs from provider dim");
  for (double v : e) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kProtocol, "non-finite embedding value");
  }
  return e;
}

}  // namespace

ExternalTextEmbedder::ExternalTextEmbedder(std::shared_ptr<Transport> transport, std::string id,
                                           std::size_t dim, std::chrono::milliseconds timeout)
    : transport_(std::move(transport)), id_(std::move(id)), dim_(dim), timeout_(timeout) {}

std::vector<double> ExternalTextEmbedder::embed(const std::string& text) {
  const auto resp = transport_->exchange(wire::request(wire::OpCode::kEmbedText, {{"text", text}}), timeout_);
  return checked_embedding(resp, dim_);
}

ExternalImageEmbedder::ExternalImageEmbedder(std::shared_ptr<Transport> transport, std::string id,
                                             std::size_t dim, std::chrono::milliseconds timeout)
    : transport_(std::move(transport)), id_(std::move(id)), dim_(dim), timeout_(timeout) {}

std::vector<double> ExternalImageEmbedder::embed(const ImageInput& image) {
  const auto resp = transport_->exchange(image_request(wire::OpCode::kEmbedImage, image), timeout_);
  return checked_embedding(resp, dim_);
}

ExternalDetector::ExternalDetector(std::shared_ptr<Transport> transport, std::string id,
                                   std::chrono::milliseconds timeout)
    : transport_(std::move(transport)), id_(std::move(id)), timeout_(timeout) {}

std::vector<std::string> ExternalDetector::detect(const ImageInput& image) {
  const auto resp = transport_->exchange(image_request(wire::OpCode::kDetect, image), timeout_);
  wire::throw_if_error(resp);
  return resp.header.at("labels").get<std::vector<std::string>>();
}

ProviderSet make_providers(const std::string& spec, std::chrono::milliseconds timeout) {
  if (spec == "stub") {
    return {std::make_shared<StubTextEmbedder>(), std::make_shared<StubImageEmbedder>(),
            std::make_shared<StubDetector>()};
  }
  if (spec.rfind("external:", 0) == 0) {
    std::shared_ptr<Transport> t = transport_from_endpoint(spec.substr(9));
    const auto hello = t->exchange(wire::request(wire::OpCode::kHello), timeout);
    wire::throw_if_error(hello);
    const auto& p = hello.header.at("providers");
    const auto id = p.at("provider_id").get<std::string>();
    return {std::make_shared<ExternalTextEmbedder>(t, id + "-text", p.at("text_dim").get<std::size_t>(), timeout),
            std::make_shared<ExternalImageEmbedder>(t, id + "-vision", p.at("vision_dim").get<std::size_t>(), timeout),
            std::make_shared<ExternalDetector>(t, id + "-detector", timeout)};
  }
  throw Error(ErrorCode::kInvalidArgument, "providers must be 'stub' or 'external:<endpoint>'");
}

}  // namespace latsteer
