// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "latsteer/metrics.hpp"
#include "latsteer/providers.hpp"

namespace latsteer {

struct RankedAttribute {
  std::string name;
  double cosine = 0.0;

  friend bool operator==(const RankedAttribute&, const RankedAttribute&) = default;
};

// Top-k attributes by cosine similarity to the concept, descending; equal
// cosines are ordered by name.
std::vector<RankedAttribute> rank_attributes(
    std::span<const double> concept_embedding,
    const std::map<std::string, std::vector<double>>& attribute_embeddings, std::size_t k);

using FrequencyMap = std::map<std::string, std::size_t>;

// Number of images each label appears in. Repeats within one image count once.
FrequencyMap tally_detections(const std::vector<std::vector<std::string>>& detections);

// A zero-shot question asked of every image, e.g. gender with
// {"man": "A picture of a man", "woman": "A picture of a woman"}.
struct SocialCategory {
  std::string name;
  std::vector<ClassSpec> classes;  // label + prompt

  friend bool operator==(const SocialCategory&, const SocialCategory&) = default;
};

std::vector<SocialCategory> default_social_categories();

struct BiasReportOptions {
  std::size_t k = 15;
  std::vector<SocialCategory> social = default_social_categories();
  // Adds a per-image vision ranking next to the aggregated one.
  bool per_image = false;
};

// A panel is unavailable when its provider failed; `error` says why.
struct PanelStatus {
  bool available = true;
  std::string error;

  friend bool operator==(const PanelStatus&, const PanelStatus&) = default;
};

struct BiasReportDoc {
  std::string concept_name;
  std::size_t n_images = 0;
  std::size_t k = 0;
  std::vector<RankedAttribute> top_attributes_text;
  PanelStatus text_panel;
  std::vector<RankedAttribute> top_attributes_vision;
  PanelStatus vision_panel;
  std::map<std::string, std::vector<RankedAttribute>> per_image_vision;
  FrequencyMap detection_frequencies;
  PanelStatus detection_panel;
  std::map<std::string, FrequencyMap> social_tallies;
  PanelStatus social_panel;
  std::map<std::string, std::string> provider_ids;

  friend bool operator==(const BiasReportDoc&, const BiasReportDoc&) = default;
};

// Text panel: concept vs attribute text embeddings. Vision panel: mean image
// embedding vs attribute text embeddings. Provider failures mark the affected
// panels unavailable instead of aborting.
BiasReportDoc build_report(const std::string& concept_name, const std::vector<std::string>& attribute_vocab,
                           const std::vector<std::string>& image_refs, const ProviderSet& providers,
                           const BiasReportOptions& options = {});

// Regular files in `dir` (sorted), skipping .caption / .detections sidecars.
std::vector<std::string> list_image_refs(const std::filesystem::path& dir);

// One attribute per line; blank lines and '#' comments skipped.
std::vector<std::string> read_attribute_file(const std::filesystem::path& path);

nlohmann::json report_to_json(const BiasReportDoc& doc);
BiasReportDoc report_from_json(const nlohmann::json& j);

// Indented JSON with sorted keys and a trailing newline.
std::string canonical_report_text(const BiasReportDoc& doc);

}  // namespace latsteer
