// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/stub_service.hpp"

#include "latsteer/backend.hpp"
#include "latsteer/providers.hpp"
#include "latsteer/tensor_io.hpp"
#include "latsteer/toy_backend.hpp"

namespace latsteer::stub {

namespace {

ImageInput image_from(const wire::Message& req) {
  ImageInput in;
  in.ref = req.header.value("ref", std::string());
  if (!req.blobs.empty()) in.tensor = tensor_io::decode(req.blobs.front());
  return in;
}

wire::Message generate(const wire::Message& req, const EchoConfig& config) {
  const auto seed = req.header.at("seed").get<std::uint64_t>();
  const auto capture = req.header.at("capture").get<std::vector<std::uint32_t>>();
  LatentTensor z = toy::draw_initial_latent(config.latent_shape, seed);
  const auto offset_blob = req.header.value("offset_blob", -1);
  if (offset_blob >= 0) {
    const LatentTensor offset = tensor_io::decode(req.blobs.at(static_cast<std::size_t>(offset_blob)));
    if (offset.shape() != z.shape()) throw Error(ErrorCode::kShapeMismatch, "offset shape");
    std::vector<float> v(z.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = static_cast<float>(static_cast<double>(z[i]) + static_cast<double>(offset[i]));
    }
    z = LatentTensor(std::move(v), z.shape());
  }
  const std::string bytes = tensor_io::encode(z);
  std::vector<std::string> blobs;
  std::vector<std::uint32_t> steps;
  for (auto s : capture) {
    if (s > config.k) throw Error(ErrorCode::kOutOfRange, "capture step beyond k");
    steps.push_back(s);
    blobs.push_back(bytes);
  }
  blobs.push_back(bytes);
  nlohmann::json h = {{"seed", seed},
                      {"snapshot_steps", steps},
                      {"image_ref", "images/" + tensor_io::sha256_hex(bytes) + ".lstr"}};
  return wire::response_to(req, std::move(h), std::move(blobs));
}

}  // namespace

wire::Message handle(const wire::Message& req, const EchoConfig& config) {
  switch (req.opcode()) {
    case wire::OpCode::kHello: {
      BackendDescriptor d;
      d.backend_id = config.backend_id;
      d.kind = BackendKind::kExternal;
      d.latent_shape = config.latent_shape;
      d.k = config.k;
      d.capabilities.embedding_offset_hook = config.embedding_offset_hook;
      return wire::response_to(
          req, {{"descriptor", descriptor_to_json(d)},
                {"providers",
                 {{"provider_id", "stub"},
                  {"text_dim", config.embedding_dim},
                  {"vision_dim", config.embedding_dim}}}});
    }
    case wire::OpCode::kGenerate:
      return generate(req, config);
    case wire::OpCode::kEmbedText: {
      StubTextEmbedder text(config.embedding_dim);
      return wire::response_to(req, {{"embedding", text.embed(req.header.at("text").get<std::string>())}});
    }
    case wire::OpCode::kEmbedImage: {
      StubImageEmbedder vision(config.embedding_dim);
      return wire::response_to(req, {{"embedding", vision.embed(image_from(req))}});
    }
    case wire::OpCode::kDetect: {
      StubDetector det;
      return wire::response_to(req, {{"labels", det.detect(image_from(req))}});
    }
    default:
      return wire::error_response("unknown op " + std::to_string(req.op), "protocol");
  }
}

}  // namespace latsteer::stub
