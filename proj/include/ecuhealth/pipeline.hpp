#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "ecuhealth/artifact.hpp"
#include "ecuhealth/autoencoder.hpp"
#include "ecuhealth/domain.hpp"
#include "ecuhealth/error.hpp"
#include "ecuhealth/forest.hpp"
#include "ecuhealth/io.hpp"
#include "ecuhealth/preprocessing.hpp"
#include "ecuhealth/residual.hpp"

namespace ecuhealth {

/// Everything the training pipeline needs besides data. One seed drives the
/// split, the autoencoder initialisation and batch order, and the forests;
/// each consumer derives its own stream from it.
struct TrainingSettings {
  std::uint64_t seed = 0;
  TrainConfig autoencoder;
  ForestConfig forest;
};

/// Reads a training configuration document:
/// {"seed": N, "autoencoder": {...}, "forest": {...}}; missing keys keep
/// their defaults.
inline TrainingSettings training_settings_from_json(const nlohmann::json& doc) {
  try {
    TrainingSettings s;
    s.seed = doc.value("seed", s.seed);
    if (doc.contains("autoencoder")) s.autoencoder = train_config_from_json(doc.at("autoencoder"));
    if (doc.contains("forest")) s.forest = forest_config_from_json(doc.at("forest"));
    return s;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::parse_error, std::string("training config: ") + ex.what());
  }
}

inline TrainingSettings load_training_settings(const std::filesystem::path& path) {
  const auto body = io::read_file(path);
  try {
    return training_settings_from_json(nlohmann::json::parse(body));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::parse_error, "'" + path.string() + "': " + ex.what());
  } catch (const Error& e) {
    throw Error(e.code(), "'" + path.string() + "': " + e.detail());
  }
}

/// The fitted artifact together with the intermediate products callers may
/// want to report on.
struct TrainingOutcome {
  ModelArtifact artifact;
  SplitDataset split;
  TrainTrace trace;
};

namespace detail {

/// Runs one stage, prefixing any error with the stage name.
template <class F>
auto run_stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.detail());
  }
}

}  // namespace detail

/// cleanse -> split -> fit normalizer -> train autoencoder -> residual
/// profile on validation residuals -> forest bank on the training split.
inline TrainingOutcome fit_pipeline(const Dataset& raw, const TrainingSettings& settings) {
  const auto& catalog = raw.catalog();
  TrainConfig ae_config = settings.autoencoder;
  ae_config.seed = settings.seed;
  ForestConfig forest_config = settings.forest;
  forest_config.seed = settings.seed;

  auto cleansed = detail::run_stage("cleanse", [&] { return cleanse(raw); });
  auto parts = detail::run_stage("split", [&] { return split(cleansed.data, settings.seed); });
  auto normalizer = detail::run_stage("normalize", [&] { return fit_normalizer(parts.train); });
  const Matrix train_x = normalize(parts.train, normalizer);
  const Matrix validation_x = normalize(parts.validation, normalizer);

  auto trained = detail::run_stage("train", [&] {
    return train(init_model(settings.seed), train_x, validation_x, ae_config);
  });
  auto profile = detail::run_stage("calibrate", [&] {
    return fit_profile(residuals(trained.model, validation_x));
  });
  auto bank = detail::run_stage("forest", [&] { return fit_bank(train_x, catalog, forest_config); });

  TrainingMetadata meta;
  meta.seed = settings.seed;
  meta.train_config = ae_config;
  meta.forest_config = forest_config;
  meta.cleansing = cleansed.report;
  meta.train_rows = parts.train.size();
  meta.validation_rows = parts.validation.size();
  meta.test_rows = parts.test.size();
  meta.epochs_run = trained.trace.epochs.size();
  meta.best_epoch = trained.trace.best_epoch;
  meta.best_validation_loss = trained.trace.best_validation_loss();

  ModelArtifact artifact{catalog,        std::move(normalizer), std::move(trained.model), std::move(profile),
                         std::move(bank), std::move(meta)};
  return {std::move(artifact), std::move(parts), std::move(trained.trace)};
}

}  // namespace ecuhealth
