// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "latsteer/core.hpp"
#include "latsteer/toy_backend.hpp"
#include "latsteer/transport.hpp"

namespace latsteer {

// A generated sample as seen by encoders and detectors: an image file
// reference, a raw latent, or both.
struct ImageInput {
  std::string ref;
  LatentTensor tensor;
};

ImageInput image_input(const TrajectoryRecord& record);
std::vector<ImageInput> image_inputs(const std::vector<TrajectoryRecord>& records);

enum class Modality { kText, kVision };

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> embed(const std::string& text) = 0;
};

class ImageEmbedder {
 public:
  virtual ~ImageEmbedder() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> embed(const ImageInput& image) = 0;
};

// Open-vocabulary object/attribute detector; returns label strings per image.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::string id() const = 0;
  virtual std::vector<std::string> detect(const ImageInput& image) = 0;
};

// Deterministic stand-ins. Text: sum over lower-cased alphanumeric tokens of
// a per-token Gaussian vector keyed by the token hash. Images: the caption in
// "<ref>.caption" when present, else a hash of the file (or ref) bytes; a
// tensor-only input is projected through a fixed Gaussian matrix.
// Detector: one label per line of "<ref>.detections".
class StubTextEmbedder final : public TextEmbedder {
 public:
  explicit StubTextEmbedder(std::size_t dim = 64) : dim_(dim) {}
  std::string id() const override { return "stub-text"; }
  std::size_t dim() const override { return dim_; }
  std::vector<double> embed(const std::string& text) override;

 private:
  std::size_t dim_;
};

class StubImageEmbedder final : public ImageEmbedder {
 public:
  explicit StubImageEmbedder(std::size_t dim = 64) : dim_(dim), text_(dim) {}
  std::string id() const override { return "stub-vision"; }
  std::size_t dim() const override { return dim_; }
  std::vector<double> embed(const ImageInput& image) override;

 private:
  std::size_t dim_;
  StubTextEmbedder text_;
};

class StubDetector final : public Detector {
 public:
  std::string id() const override { return "stub-detector"; }
  std::vector<std::string> detect(const ImageInput& image) override;
};

// Providers served over the wire protocol (embed-text, embed-image, detect).
class ExternalTextEmbedder final : public TextEmbedder {
 public:
  ExternalTextEmbedder(std::shared_ptr<Transport> transport, std::string id, std::size_t dim,
                       std::chrono::milliseconds timeout);
  std::string id() const override { return id_; }
  std::size_t dim() const override { return dim_; }
  std::vector<double> embed(const std::string& text) override;

 private:
  std::shared_ptr<Transport> transport_;
  std::string id_;
  std::size_t dim_;
  std::chrono::milliseconds timeout_;
};

class ExternalImageEmbedder final : public ImageEmbedder {
 public:
  ExternalImageEmbedder(std::shared_ptr<Transport> transport, std::string id, std::size_t dim,
                        std::chrono::milliseconds timeout);
  std::string id() const override { return id_; }
  std::size_t dim() const override { return dim_; }
  std::vector<double> embed(const ImageInput& image) override;

 private:
  std::shared_ptr<Transport> transport_;
  std::string id_;
  std::size_t dim_;
  std::chrono::milliseconds timeout_;
};

class ExternalDetector final : public Detector {
 public:
  ExternalDetector(std::shared_ptr<Transport> transport, std::string id,
                   std::chrono::milliseconds timeout);
  std::string id() const override { return id_; }
  std::vector<std::string> detect(const ImageInput& image) override;

 private:
  std::shared_ptr<Transport> transport_;
  std::string id_;
  std::chrono::milliseconds timeout_;
};

struct ProviderSet {
  std::shared_ptr<TextEmbedder> text;
  std::shared_ptr<ImageEmbedder> vision;
  std::shared_ptr<Detector> detector;
};

// "stub" or "external:<endpoint>".
ProviderSet make_providers(const std::string& spec,
                           std::chrono::milliseconds timeout = std::chrono::seconds(300));

}  // namespace latsteer
