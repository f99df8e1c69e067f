// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/bias_report.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "latsteer/error.hpp"
#include "latsteer/similarity.hpp"

namespace latsteer {

std::vector<RankedAttribute> rank_attributes(
    std::span<const double> concept_embedding,
    const std::map<std::string, std::vector<double>>& attribute_embeddings, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "rank_attributes: k must be >= 1");
  if (attribute_embeddings.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "rank_attributes: empty attribute vocabulary");
  }
  std::vector<RankedAttribute> all;
  all.reserve(attribute_embeddings.size());
  for (const auto& [name, emb] : attribute_embeddings) {
    if (emb.size() != concept_embedding.size()) {
      throw Error(ErrorCode::kShapeMismatch, "attribute '" + name + "' has dim " +
                                                 std::to_string(emb.size()) + ", concept has " +
                                                 std::to_string(concept_embedding.size()));
    }
    all.push_back({name, cosine_similarity(concept_embedding, emb)});
  }
  auto before = [](const RankedAttribute& a, const RankedAttribute& b) {
    return a.cosine != b.cosine ? a.cosine > b.cosine : a.name < b.name;
  };
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), before);
  all.resize(keep);
  return all;
}

FrequencyMap tally_detections(const std::vector<std::vector<std::string>>& detections) {
  FrequencyMap counts;
  for (const auto& image : detections) {
    for (const auto& label : std::set<std::string>(image.begin(), image.end())) ++counts[label];
  }
  return counts;
}

std::vector<SocialCategory> default_social_categories() {
  auto cls = [](std::string label, std::string prompt) {
    return ClassSpec{std::move(label), std::nullopt, std::move(prompt)};
  };
  return {
      {"gender", {cls("man", "A picture of a man"), cls("woman", "A picture of a woman")}},
      {"race",
       {cls("asian", "A picture of an asian person"), cls("black", "A picture of a black person"),
        cls("indian", "A picture of an indian person"),
        cls("latino", "A picture of a latino person"),
        cls("middle_eastern", "A picture of a middle eastern person"),
        cls("white", "A picture of a white person")}},
  };
}

namespace {

std::vector<double> mean_of(const std::vector<std::vector<double>>& rows) {
  std::vector<double> m(rows.front().size(), 0.0);
  for (const auto& r : rows) {
    if (r.size() != m.size()) throw Error(ErrorCode::kShapeMismatch, "image embeddings differ in dim");
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += r[j];
  }
  for (auto& v : m) v /= static_cast<double>(rows.size());
  return m;
}

PanelStatus unavailable(const std::string& why) { return {false, why}; }

}  // namespace

BiasReportDoc build_report(const std::string& concept_name, const std::vector<std::string>& attribute_vocab,
                           const std::vector<std::string>& image_refs, const ProviderSet& providers,
                           const BiasReportOptions& options) {
  if (options.k == 0) throw Error(ErrorCode::kInvalidArgument, "report k must be >= 1");
  BiasReportDoc doc;
  doc.concept_name = concept_name;
  doc.n_images = image_refs.size();
  doc.k = options.k;
  if (providers.text) doc.provider_ids["text"] = providers.text->id();
  if (providers.vision) doc.provider_ids["vision"] = providers.vision->id();
  if (providers.detector) doc.provider_ids["detector"] = providers.detector->id();

  std::vector<ImageInput> images;
  for (const auto& ref : image_refs) images.push_back({ref, {}});

  std::map<std::string, std::vector<double>> attr_emb;
  std::string attr_error;
  try {
    if (!providers.text) throw Error(ErrorCode::kBackend, "no text provider");
    if (attribute_vocab.empty()) throw Error(ErrorCode::kInvalidArgument, "empty attribute vocabulary");
    for (const auto& a : attribute_vocab) attr_emb[a] = providers.text->embed(a);
  } catch (const std::exception& e) {
    attr_error = e.what();
  }

  if (!attr_error.empty()) {
    doc.text_panel = unavailable(attr_error);
  } else {
    try {
      doc.top_attributes_text = rank_attributes(providers.text->embed(concept_name), attr_emb, options.k);
    } catch (const std::exception& e) {
      doc.text_panel = unavailable(e.what());
    }
  }

  if (!attr_error.empty()) {
    doc.vision_panel = unavailable(attr_error);
  } else if (images.empty()) {
    doc.vision_panel = unavailable("no images");
  } else {
    try {
      if (!providers.vision) throw Error(ErrorCode::kBackend, "no vision provider");
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < images.size(); ++i) {
        try {
          rows.push_back(providers.vision->embed(images[i]));
        } catch (const std::exception& e) {
          throw Error(ErrorCode::kBackend, "image '" + images[i].ref + "': " + e.what());
        }
        if (options.per_image) {
          doc.per_image_vision[images[i].ref] = rank_attributes(rows.back(), attr_emb, options.k);
        }
      }
      doc.top_attributes_vision = rank_attributes(mean_of(rows), attr_emb, options.k);
    } catch (const std::exception& e) {
      doc.vision_panel = unavailable(e.what());
      doc.per_image_vision.clear();
    }
  }

  try {
    if (!providers.detector) throw Error(ErrorCode::kBackend, "no detection provider");
    std::vector<std::vector<std::string>> detections;
    for (const auto& img : images) {
      try {
        detections.push_back(providers.detector->detect(img));
      } catch (const std::exception& e) {
        throw Error(ErrorCode::kBackend, "image '" + img.ref + "': " + e.what());
      }
    }
    doc.detection_frequencies = tally_detections(detections);
  } catch (const std::exception& e) {
    doc.detection_panel = unavailable(e.what());
  }

  try {
    for (const auto& category : options.social) {
      AttributeClassifier classifier;
      classifier.kind = ClassifierKind::kEmbeddingZeroShot;
      classifier.classes = category.classes;
      classifier.text = providers.text;
      classifier.vision = providers.vision;
      FrequencyMap counts;
      for (const auto& c : category.classes) counts[c.label] = 0;
      if (!images.empty()) {
        for (auto idx : classify_indices(classifier, images)) ++counts[category.classes[idx].label];
      } else {
        classifier.validate();
      }
      doc.social_tallies[category.name] = std::move(counts);
    }
  } catch (const std::exception& e) {
    doc.social_panel = unavailable(e.what());
    doc.social_tallies.clear();
  }
  return doc;
}

std::vector<std::string> list_image_refs(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kInvalidArgument, "not a directory: " + dir.string());
  }
  std::vector<std::string> refs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".caption" || ext == ".detections") continue;
    refs.push_back(entry.path().string());
  }
  std::sort(refs.begin(), refs.end());
  return refs;
}

std::vector<std::string> read_attribute_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    auto attr = line.substr(b, e - b + 1);
    if (seen.insert(attr).second) out.push_back(std::move(attr));
  }
  return out;
}

namespace {

nlohmann::json ranked_to_json(const std::vector<RankedAttribute>& list) {
  auto arr = nlohmann::json::array();
  for (const auto& r : list) arr.push_back({{"attribute", r.name}, {"cosine", r.cosine}});
  return arr;
}

std::vector<RankedAttribute> ranked_from_json(const nlohmann::json& arr) {
  std::vector<RankedAttribute> out;
  for (const auto& r : arr) out.push_back({r.at("attribute").get<std::string>(), r.at("cosine").get<double>()});
  return out;
}

nlohmann::json panel_to_json(const PanelStatus& p) {
  nlohmann::json j = {{"available", p.available}};
  if (!p.available) j["error"] = p.error;
  return j;
}

PanelStatus panel_from_json(const nlohmann::json& j) {
  return {j.at("available").get<bool>(), j.value("error", std::string{})};
}

}  // namespace

nlohmann::json report_to_json(const BiasReportDoc& doc) {
  nlohmann::json j;
  j["concept"] = doc.concept_name;
  j["n_images"] = doc.n_images;
  j["k"] = doc.k;
  j["top_attributes_text"] = ranked_to_json(doc.top_attributes_text);
  j["top_attributes_vision"] = ranked_to_json(doc.top_attributes_vision);
  j["detection_frequencies"] = doc.detection_frequencies;
  j["social_tallies"] = doc.social_tallies;
  j["provider_ids"] = doc.provider_ids;
  j["panels"] = {{"text", panel_to_json(doc.text_panel)},
                 {"vision", panel_to_json(doc.vision_panel)},
                 {"detections", panel_to_json(doc.detection_panel)},
                 {"social", panel_to_json(doc.social_panel)}};
  if (!doc.per_image_vision.empty()) {
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [ref, list] : doc.per_image_vision) per[ref] = ranked_to_json(list);
    j["per_image_vision"] = per;
  }
  return j;
}

BiasReportDoc report_from_json(const nlohmann::json& j) {
  try {
    BiasReportDoc doc;
    doc.concept_name = j.at("concept").get<std::string>();
    doc.n_images = j.at("n_images").get<std::size_t>();
    doc.k = j.at("k").get<std::size_t>();
    doc.top_attributes_text = ranked_from_json(j.at("top_attributes_text"));
    doc.top_attributes_vision = ranked_from_json(j.at("top_attributes_vision"));
    doc.detection_frequencies = j.at("detection_frequencies").get<FrequencyMap>();
    doc.social_tallies = j.at("social_tallies").get<std::map<std::string, FrequencyMap>>();
    doc.provider_ids = j.at("provider_ids").get<std::map<std::string, std::string>>();
    const auto& panels = j.at("panels");
    doc.text_panel = panel_from_json(panels.at("text"));
    doc.vision_panel = panel_from_json(panels.at("vision"));
    doc.detection_panel = panel_from_json(panels.at("detections"));
    doc.social_panel = panel_from_json(panels.at("social"));
    if (j.contains("per_image_vision")) {
      for (const auto& [ref, list] : j.at("per_image_vision").items()) {
        doc.per_image_vision[ref] = ranked_from_json(list);
      }
    }
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruption, std::string("bias report: ") + e.what());
  }
}

std::string canonical_report_text(const BiasReportDoc& doc) {
  return report_to_json(doc).dump(2) + "\n";
}

}  // namespace latsteer
