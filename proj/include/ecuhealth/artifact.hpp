#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecuhealth/autoencoder.hpp"
#include "ecuhealth/domain.hpp"
#include "ecuhealth/error.hpp"
#include "ecuhealth/forest.hpp"
#include "ecuhealth/io.hpp"
#include "ecuhealth/monitor.hpp"
#include "ecuhealth/preprocessing.hpp"
#include "ecuhealth/residual.hpp"
#include "ecuhealth/text.hpp"

namespace ecuhealth {

inline constexpr int kArtifactFormatVersion = 1;
inline constexpr std::string_view kArtifactFormatName = "ecuhealth-model";

/// How an artifact came to be: the seed and configurations used and the
/// sizes of the data each stage saw.
struct TrainingMetadata {
  std::uint64_t seed = 0;
  TrainConfig train_config;
  ForestConfig forest_config;
  CleansingReport cleansing;
  std::size_t train_rows = 0;
  std::size_t validation_rows = 0;
  std::size_t test_rows = 0;
  std::size_t epochs_run = 0;
  std::optional<std::size_t> best_epoch;
  double best_validation_loss = 0.0;

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

/// Every fitted component of the monitor, bound to one catalog and one
/// normalizer.
struct ModelArtifact {
  SensorCatalog catalog = default_catalog();
  NormalizationParams normalizer;
  AutoencoderModel autoencoder;
  ResidualProfile profile;
  ForestBank bank;
  TrainingMetadata metadata;

  MonitorPipeline pipeline(HealthIndex alert_threshold = HealthIndex::almost_defective) const {
    return MonitorPipeline(catalog, normalizer, autoencoder, profile, bank, alert_threshold);
  }

  /// Hash tying each component to the catalog and normalizer it was fitted
  /// against.
  std::string binding() const {
    return text::hex64(text::fnv1a(catalog.fingerprint() + ":" + normalizer.fingerprint()));
  }
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline std::vector<std::int64_t> widen(const std::vector<std::size_t>& v) {
  return {v.begin(), v.end()};
}

inline ojson features_to_json(const FeaturesPerSplit& f) {
  switch (f.mode) {
    case FeaturesPerSplit::Mode::third: return "third";
    case FeaturesPerSplit::Mode::all: return "all";
    case FeaturesPerSplit::Mode::count: return f.count;
  }
  return "third";
}

inline FeaturesPerSplit features_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "third") return {FeaturesPerSplit::Mode::third, 1};
    if (s == "all") return {FeaturesPerSplit::Mode::all, 1};
    throw Error(Errc::parse_error, "features_per_split must be \"third\", \"all\" or a count, got '" + s + "'");
  }
  const auto n = j.get<std::size_t>();
  if (n < 1) throw Error(Errc::parse_error, "features_per_split count must be at least 1");
  return {FeaturesPerSplit::Mode::count, n};
}

}  // namespace detail

inline nlohmann::ordered_json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"seed", c.seed},
          {"early_stop_patience", c.early_stop_patience}};
}

/// Missing keys keep their defaults.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c = {}) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.validate();
  return c;
}

inline nlohmann::ordered_json forest_config_to_json(const ForestConfig& c) {
  return {{"n_trees", c.n_trees},
          {"max_depth", c.max_depth},
          {"min_samples_leaf", c.min_samples_leaf},
          {"features_per_split", detail::features_to_json(c.features_per_split)},
          {"bootstrap", c.bootstrap},
          {"seed", c.seed}};
}

inline ForestConfig forest_config_from_json(const nlohmann::json& j, ForestConfig c = {}) {
  c.n_trees = j.value("n_trees", c.n_trees);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
  if (j.contains("features_per_split")) c.features_per_split = detail::features_from_json(j.at("features_per_split"));
  c.bootstrap = j.value("bootstrap", c.bootstrap);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Component encoders

inline nlohmann::ordered_json tree_to_json(const RegressionTree& tree) {
  std::vector<std::int64_t> feature, left;
  std::vector<double> threshold, leaf_value;
  feature.reserve(tree.nodes.size());
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    if (n.is_leaf()) {
      leaf_value.push_back(n.value);
    } else {
      left.push_back(n.left);
      threshold.push_back(n.threshold);
    }
  }
  return {{"feature", text::encode_ints(feature)},
          {"left", text::encode_ints(left)},
          {"threshold", text::encode_reals(threshold)},
          {"leaf_value", text::encode_reals(leaf_value)}};
}

inline RegressionTree tree_from_json(const nlohmann::json& j) {
  const auto feature = text::decode_ints(j.at("feature").get<std::string>());
  const auto left = text::decode_ints(j.at("left").get<std::string>());
  const auto threshold = text::decode_reals(j.at("threshold").get<std::string>());
  const auto leaf_value = text::decode_reals(j.at("leaf_value").get<std::string>());
  if (feature.empty() || left.size() != threshold.size() ||
      left.size() + leaf_value.size() != feature.size()) {
    throw Error(Errc::parse_error, "tree node arrays have inconsistent lengths");
  }
  RegressionTree tree;
  tree.nodes.resize(feature.size());
  std::size_t internal = 0, leaf = 0;
  for (std::size_t i = 0; i < feature.size(); ++i) {
    auto& n = tree.nodes[i];
    if (feature[i] == TreeNode::kLeaf) {
      n.value = leaf_value.at(leaf++);
      continue;
    }
    if (feature[i] < 0) throw Error(Errc::parse_error, "negative feature id in tree");
    if (internal >= left.size()) throw Error(Errc::parse_error, "tree node arrays have inconsistent lengths");
    n.feature = static_cast<std::int32_t>(feature[i]);
    n.threshold = threshold[internal];
    n.left = static_cast<std::int32_t>(left[internal]);
    n.right = n.left + 1;
    ++internal;
  }
  if (internal != left.size() || leaf != leaf_value.size()) {
    throw Error(Errc::parse_error, "tree node arrays have inconsistent lengths");
  }
  return tree;
}

/// The artifact as a JSON document. Parameter arrays are space-separated
/// decimal strings with 17 significant digits, so reading them back is exact.
inline nlohmann::ordered_json artifact_to_json(const ModelArtifact& a) {
  using detail::ojson;
  const auto binding = a.binding();

  ojson layers = ojson::array();
  for (const auto& l : a.autoencoder.layers) {
    layers.push_back({{"inputs", l.inputs},
                      {"outputs", l.outputs},
                      {"activation", std::string(to_string(l.activation))},
                      {"weights", text::encode_reals(l.weights)},
                      {"biases", text::encode_reals(l.biases)}});
  }

  ojson profile = ojson::array();
  for (const auto& s : a.profile.sensors) profile.push_back({{"mu", s.mu}, {"sigma", s.sigma}, {"n", s.n}});

  ojson forests = ojson::array();
  for (const auto& f : a.bank.forests) {
    ojson trees = ojson::array();
    for (const auto& t : f.trees) trees.push_back(tree_to_json(t));
    forests.push_back({{"target_sensor", f.target_sensor},
                       {"feature_ids", f.feature_ids},
                       {"config", forest_config_to_json(f.config)},
                       {"trees", std::move(trees)}});
  }

  const auto& m = a.metadata;
  ojson best_epoch = m.best_epoch ? ojson(*m.best_epoch) : ojson(nullptr);
  return {
      {"format", kArtifactFormatName},
      {"format_version", kArtifactFormatVersion},
      {"catalog_fingerprint", a.catalog.fingerprint()},
      {"catalog", io::catalog_to_json(a.catalog)},
      {"normalizer",
       {{"binding", binding},
        {"fingerprint", a.normalizer.fingerprint()},
        {"min", text::encode_reals(a.normalizer.min)},
        {"max", text::encode_reals(a.normalizer.max)}}},
      {"autoencoder",
       {{"binding", binding},
        {"train_config", train_config_to_json(m.train_config)},
        {"layers", std::move(layers)}}},
      {"residual_profile", {{"binding", binding}, {"sensors", std::move(profile)}}},
      {"forest_bank", {{"binding", binding}, {"forests", std::move(forests)}}},
      {"metadata",
       {{"seed", m.seed},
        {"train_config", train_config_to_json(m.train_config)},
        {"forest_config", forest_config_to_json(m.forest_config)},
        {"cleansing",
         {{"rows_in", m.cleansing.rows_in},
          {"rows_dropped_nonfinite", m.cleansing.rows_dropped_nonfinite},
          {"rows_dropped_out_of_range", m.cleansing.rows_dropped_out_of_range},
          {"rows_out", m.cleansing.rows_out}}},
        {"rows", {{"train", m.train_rows}, {"validation", m.validation_rows}, {"test", m.test_rows}}},
        {"epochs_run", m.epochs_run},
        {"best_epoch", best_epoch},
        {"best_validation_loss", m.best_validation_loss}}},
  };
}

inline std::string artifact_to_string(const ModelArtifact& a) { return artifact_to_json(a).dump(1) + "\n"; }

/// Rebuilds an artifact and checks that it belongs to `expected_catalog`
/// (when given), that its format version is supported, and that every
/// component carries the binding of the stored catalog and normalizer.
inline ModelArtifact artifact_from_json(const nlohmann::json& doc,
                                        const std::optional<SensorCatalog>& expected_catalog = std::nullopt) {
  try {
    if (doc.value("format", std::string()) != kArtifactFormatName) {
      throw Error(Errc::parse_error, "not a model artifact");
    }
    const int version = doc.at("format_version").get<int>();
    if (version != kArtifactFormatVersion) {
      throw Error(Errc::unsupported_version, "artifact format version " + std::to_string(version) +
                                                 " is not supported (reader supports " +
                                                 std::to_string(kArtifactFormatVersion) + ")");
    }
    ModelArtifact a;
    a.catalog = io::catalog_from_json(doc.at("catalog"));
    const auto stored_fp = doc.at("catalog_fingerprint").get<std::string>();
    if (stored_fp != a.catalog.fingerprint()) {
      throw Error(Errc::fingerprint_mismatch, "artifact catalog does not match its recorded fingerprint " +
                                                  stored_fp + " (content hashes to " +
                                                  a.catalog.fingerprint() + ")");
    }
    if (expected_catalog && expected_catalog->fingerprint() != stored_fp) {
      throw Error(Errc::fingerprint_mismatch, "artifact was fitted for catalog " + stored_fp +
                                                  " but the supplied catalog is " +
                                                  expected_catalog->fingerprint());
    }

    const auto& norm = doc.at("normalizer");
    a.normalizer.min = text::decode_reals(norm.at("min").get<std::string>());
    a.normalizer.max = text::decode_reals(norm.at("max").get<std::string>());
    if (a.normalizer.min.size() != a.catalog.size() || a.normalizer.max.size() != a.catalog.size()) {
      throw Error(Errc::dimension_mismatch, "normalizer does not cover the catalog");
    }
    const auto binding = a.binding();
    for (const char* part : {"normalizer", "autoencoder", "residual_profile", "forest_bank"}) {
      const auto recorded = doc.at(part).at("binding").get<std::string>();
      if (recorded != binding) {
        throw Error(Errc::fingerprint_mismatch, std::string(part) + " is bound to " + recorded +
                                                    " but the catalog and normalizer hash to " + binding);
      }
    }

    for (const auto& l : doc.at("autoencoder").at("layers")) {
      DenseLayer layer;
      layer.inputs = l.at("inputs").get<std::size_t>();
      layer.outputs = l.at("outputs").get<std::size_t>();
      layer.activation = parse_activation(l.at("activation").get<std::string>());
      layer.weights = text::decode_reals(l.at("weights").get<std::string>());
      layer.biases = text::decode_reals(l.at("biases").get<std::string>());
      a.autoencoder.layers.push_back(std::move(layer));
    }

    for (const auto& s : doc.at("residual_profile").at("sensors")) {
      a.profile.sensors.push_back(
          {s.at("mu").get<double>(), s.at("sigma").get<double>(), s.at("n").get<std::size_t>()});
    }

    for (const auto& f : doc.at("forest_bank").at("forests")) {
      ForestModel model;
      model.target_sensor = f.at("target_sensor").get<std::size_t>();
      model.feature_ids = f.at("feature_ids").get<std::vector<std::size_t>>();
      model.config = forest_config_from_json(f.at("config"));
      for (const auto& t : f.at("trees")) model.trees.push_back(tree_from_json(t));
      a.bank.forests.push_back(std::move(model));
    }

    const auto& m = doc.at("metadata");
    a.metadata.seed = m.at("seed").get<std::uint64_t>();
    a.metadata.train_config = train_config_from_json(m.at("train_config"));
    a.metadata.forest_config = forest_config_from_json(m.at("forest_config"));
    const auto& c = m.at("cleansing");
    a.metadata.cleansing = {c.at("rows_in").get<std::size_t>(), c.at("rows_dropped_nonfinite").get<std::size_t>(),
                            c.at("rows_dropped_out_of_range").get<std::size_t>(),
                            c.at("rows_out").get<std::size_t>()};
    const auto& rows = m.at("rows");
    a.metadata.train_rows = rows.at("train").get<std::size_t>();
    a.metadata.validation_rows = rows.at("validation").get<std::size_t>();
    a.metadata.test_rows = rows.at("test").get<std::size_t>();
    a.metadata.epochs_run = m.at("epochs_run").get<std::size_t>();
    if (!m.at("best_epoch").is_null()) a.metadata.best_epoch = m.at("best_epoch").get<std::size_t>();
    a.metadata.best_validation_loss = m.at("best_validation_loss").get<double>();

    // Assembling a pipeline runs every structural check on the components.
    (void)a.pipeline();
    return a;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::parse_error, std::string("artifact: ") + ex.what());
  }
}

inline ModelArtifact artifact_from_string(std::string_view body,
                                          const std::optional<SensorCatalog>& expected_catalog = std::nullopt) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::parse_error, std::string("artifact: ") + ex.what());
  }
  return artifact_from_json(doc, expected_catalog);
}

inline void write_artifact(const std::filesystem::path& path, const ModelArtifact& a) {
  io::write_file_atomic(path, artifact_to_string(a));
}

inline ModelArtifact read_artifact(const std::filesystem::path& path,
                                   const std::optional<SensorCatalog>& expected_catalog = std::nullopt) {
  const auto body = io::read_file(path);
  try {
    return artifact_from_string(body, expected_catalog);
  } catch (const Error& e) {
    throw Error(e.code(), "'" + path.string() + "': " + e.detail());
  }
}

}  // namespace ecuhealth
