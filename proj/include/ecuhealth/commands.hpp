#pragma once

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecuhealth/artifact.hpp"
#include "ecuhealth/benchmark.hpp"
#include "ecuhealth/domain.hpp"
#include "ecuhealth/error.hpp"
#include "ecuhealth/io.hpp"
#include "ecuhealth/monitor.hpp"
#include "ecuhealth/pipeline.hpp"
#include "ecuhealth/synthetic.hpp"
#include "ecuhealth/text.hpp"

namespace ecuhealth::cli {

/// Process exit statuses.
enum ExitCode : int { kSuccess = 0, kUsageError = 1, kDataError = 2, kInternalError = 3 };

struct GenerateOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> catalog;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;
  /// Defaults to <out stem>_truth.csv next to the telemetry file.
  std::optional<std::filesystem::path> truth;
};

struct TrainOptions {
  std::filesystem::path telemetry;
  std::optional<std::filesystem::path> catalog;
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;
};

struct EvaluateOptions {
  std::filesystem::path artifact;
  std::filesystem::path telemetry;
  std::optional<std::filesystem::path> truth;
  std::optional<std::filesystem::path> catalog;
  /// Optional machine-readable copy of the evaluation.
  std::optional<std::filesystem::path> out;
};

struct MonitorOptions {
  std::filesystem::path artifact;
  /// "-" reads standard input.
  std::string input = "-";
  /// "-" writes report lines to standard output.
  std::string out = "-";
  std::filesystem::path alert_log = "alerts.jsonl";
  std::optional<std::filesystem::path> catalog;
  HealthIndex alert_threshold = HealthIndex::almost_defective;
};

// ---------------------------------------------------------------------------
// Record encodings

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson optional_real(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

inline SensorCatalog resolve_catalog(const std::optional<std::filesystem::path>& path) {
  return path ? io::load_catalog(*path) : default_catalog();
}

inline std::string cell(const std::optional<double>& v, const char* fmt = "%.6f") {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, *v);
  return buf;
}

inline std::string cell(double v, const char* fmt = "%.6f") { return cell(std::optional<double>(v), fmt); }

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

inline std::string lpad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

/// Runs a command body and maps failures to exit statuses.
template <class F>
int guarded(std::ostream& err, const char* command, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "ecuhealth " << command << ": " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "ecuhealth " << command << ": internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const MonitorReport& r, const SensorCatalog& catalog) {
  using detail::ojson;
  ojson sensors = ojson::array();
  for (const auto& h : r.sensors) {
    sensors.push_back({{"sensor_id", h.sensor_id},
                       {"name", catalog[h.sensor_id].name},
                       {"raw_value", h.raw_value},
                       {"reconstructed_value", h.reconstructed_value},
                       {"residual", h.residual},
                       {"z", h.z_band},
                       {"health", std::string(to_string(h.health))},
                       {"substituted_value", detail::optional_real(h.substituted_value)}});
  }
  ojson alerts = ojson::array();
  for (const auto& a : r.alerts) {
    alerts.push_back({{"sensor_id", a.sensor_id},
                      {"name", catalog[a.sensor_id].name},
                      {"health", std::string(to_string(a.health))},
                      {"message", a.message}});
  }
  return {{"type", "report"}, {"timestamp_ms", r.timestamp_ms}, {"sensors", std::move(sensors)},
          {"alerts", std::move(alerts)}};
}

inline nlohmann::ordered_json error_to_json(const StreamError& e) {
  using detail::ojson;
  return {{"type", "error"},
          {"sequence", e.sequence},
          {"timestamp_ms", e.timestamp_ms ? ojson(*e.timestamp_ms) : ojson(nullptr)},
          {"message", e.message}};
}

/// Parses one line-delimited frame record: {"timestamp_ms": N, "values":
/// [...]} or {"timestamp_ms": N, "<sensor name>": value, ...}. Missing or
/// null readings become NaN and are rejected downstream.
inline std::variant<SensorFrame, std::string> parse_frame_record(std::string_view line,
                                                                 const SensorCatalog& catalog) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& ex) {
    return std::string("malformed record: ") + ex.what();
  }
  if (!j.is_object()) return std::string("record is not an object");
  const auto ts = j.find("timestamp_ms");
  if (ts == j.end() || !ts->is_number_integer()) return std::string("record lacks an integer timestamp_ms");
  SensorFrame frame{ts->get<std::int64_t>(), {}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto reading = [&](const nlohmann::json& v) { return v.is_number() ? v.get<double>() : nan; };
  if (const auto values = j.find("values"); values != j.end()) {
    if (!values->is_array()) return std::string("values must be an array");
    for (const auto& v : *values) frame.values.push_back(reading(v));
  } else {
    for (const auto& spec : catalog.sensors()) {
      const auto v = j.find(spec.name);
      frame.values.push_back(v == j.end() ? nan : reading(*v));
    }
  }
  return frame;
}

/// Pulls frames from CSV (with header) or line-delimited records; the
/// format is chosen from the first non-blank line.
class FrameReader {
 public:
  FrameReader(std::istream& in, const SensorCatalog& catalog) : in_(in), catalog_(catalog) {}

  std::optional<StreamItem> operator()() {
    std::string line;
    while (std::getline(in_, line)) {
      const auto body = text::trim(line);
      if (body.empty()) continue;
      if (!format_) {
        if (body.front() == '{') {
          format_ = Format::records;
        } else {
          format_ = Format::csv;
          try {
            io::check_telemetry_header(body, catalog_);
          } catch (const Error& e) {
            return StreamItem{StreamError{0, std::nullopt, e.detail()}};
          }
          continue;
        }
      }
      auto parsed = *format_ == Format::csv ? io::parse_frame(body, catalog_.size())
                                            : parse_frame_record(body, catalog_);
      if (auto* msg = std::get_if<std::string>(&parsed)) return StreamItem{StreamError{0, std::nullopt, *msg}};
      return StreamItem{std::move(std::get<SensorFrame>(parsed))};
    }
    return std::nullopt;
  }

 private:
  enum class Format { csv, records };
  std::istream& in_;
  const SensorCatalog& catalog_;
  std::optional<Format> format_;
};

// ---------------------------------------------------------------------------
// Commands

inline std::filesystem::path default_truth_path(const std::filesystem::path& telemetry) {
  auto p = telemetry;
  p.replace_filename(telemetry.stem().string() + "_truth.csv");
  return p;
}

inline int cmd_generate(const GenerateOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, "generate", [&] {
    const auto catalog = detail::resolve_catalog(o.catalog);
    const auto body = io::read_file(o.config);
    synthetic::ScenarioConfig config;
    try {
      config = synthetic::scenario_from_json(nlohmann::json::parse(body), catalog);
    } catch (const nlohmann::json::exception& ex) {
      throw Error(Errc::parse_error, "'" + o.config.string() + "': " + ex.what());
    } catch (const Error& e) {
      throw Error(e.code(), "'" + o.config.string() + "': " + e.detail());
    }
    if (o.seed) config.seed = *o.seed;
    const auto scenario = synthetic::generate(catalog, config);
    const auto truth_path = o.truth.value_or(default_truth_path(o.out));
    std::ostringstream truth;
    synthetic::write_truth(truth, scenario.data, scenario.truth);
    io::write_file_atomic(o.out, io::telemetry_to_string(scenario.data));
    io::write_file_atomic(truth_path, truth.str());
    out << "wrote " << scenario.data.size() << " frames to " << o.out.string() << " and ground truth to "
        << truth_path.string() << " (" << config.faults.size() << " fault windows)\n";
    return kSuccess;
  });
}

inline void print_training_summary(std::ostream& out, const TrainingOutcome& t) {
  const auto& a = t.artifact;
  const auto& m = a.metadata;
  out << "frames: " << m.cleansing.rows_in << " read, " << m.cleansing.rows_dropped_nonfinite
      << " dropped non-finite, " << m.cleansing.rows_dropped_out_of_range << " dropped out of range\n";
  out << "split: " << m.train_rows << " train, " << m.validation_rows << " validation, " << m.test_rows
      << " test\n";
  out << "autoencoder: " << m.epochs_run << " epochs, best validation loss "
      << detail::cell(m.best_validation_loss, "%.6g") << "\n\n";

  const auto test_x = normalize(t.split.test, a.normalizer);
  const auto r2 = reconstruction_r2(a.autoencoder, test_x);
  out << detail::pad("sensor", 28) << detail::lpad("ae_r2", 10) << detail::lpad("mu", 12)
      << detail::lpad("sigma", 12) << detail::lpad("k", 4) << '\n';
  for (const auto& spec : a.catalog.sensors()) {
    const auto& p = a.profile[spec.id];
    out << detail::pad(spec.name, 28) << detail::lpad(detail::cell(r2[spec.id]), 10)
        << detail::lpad(detail::cell(p.mu, "%.6g"), 12) << detail::lpad(detail::cell(p.sigma, "%.6g"), 12)
        << detail::lpad(std::to_string(a.bank[spec.id].feature_ids.size()), 4) << '\n';
  }
}

inline int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, "train", [&] {
    const auto catalog = detail::resolve_catalog(o.catalog);
    TrainingSettings settings = o.config ? load_training_settings(*o.config) : TrainingSettings{};
    if (o.seed) settings.seed = *o.seed;
    const auto data = io::load_telemetry(o.telemetry, catalog);
    const auto outcome = fit_pipeline(data, settings);
    print_training_summary(out, outcome);
    write_artifact(o.out, outcome.artifact);
    out << "\nwrote artifact " << o.out.string() << " (catalog " << catalog.fingerprint() << ")\n";
    return kSuccess;
  });
}

/// Per-sensor regression quality of an artifact on a dataset.
struct SensorEvaluation {
  std::size_t sensor_id = 0;
  std::optional<double> ae_r2;
  std::size_t k = 0;
  /// Normalized units, and the same error in physical units.
  double forest_mae = 0.0;
  double forest_mae_raw = 0.0;
  std::optional<double> forest_r2;
};

inline std::vector<SensorEvaluation> evaluate_artifact(const ModelArtifact& a, const Dataset& data) {
  const auto x = normalize(data, a.normalizer);
  const auto ae = reconstruction_r2(a.autoencoder, x);
  const auto forest = evaluate_bank(a.bank, x);
  std::vector<SensorEvaluation> out;
  for (std::size_t s = 0; s < a.catalog.size(); ++s) {
    const double span = a.normalizer.max[s] - a.normalizer.min[s];
    out.push_back({s, ae[s], forest[s].k, forest[s].mae, forest[s].mae * span, forest[s].r2});
  }
  return out;
}

inline int cmd_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, "evaluate", [&] {
    using detail::cell;
    using detail::lpad;
    using detail::ojson;
    using detail::pad;
    const auto catalog = detail::resolve_catalog(o.catalog);
    const auto artifact = read_artifact(o.artifact, catalog);
    const auto raw = io::load_telemetry(o.telemetry, catalog);
    const auto cleansed = cleanse(raw);
    if (cleansed.data.empty()) throw Error(Errc::empty_dataset, "no usable frames in '" + o.telemetry.string() + "'");
    const auto rows = evaluate_artifact(artifact, cleansed.data);

    out << "evaluated on " << cleansed.data.size() << " of " << raw.size() << " frames\n\n";
    out << pad("sensor", 28) << lpad("ae_r2", 10) << lpad("k", 4) << lpad("forest_mae", 12)
        << lpad("mae_units", 12) << lpad("forest_r2", 10) << '\n';
    ojson doc = {{"catalog_fingerprint", catalog.fingerprint()},
                 {"frames", raw.size()},
                 {"frames_evaluated", cleansed.data.size()}};
    ojson sensors = ojson::array();
    for (const auto& r : rows) {
      const auto& spec = catalog[r.sensor_id];
      out << pad(spec.name, 28) << lpad(cell(r.ae_r2), 10) << lpad(std::to_string(r.k), 4)
          << lpad(cell(r.forest_mae, "%.6g"), 12) << lpad(cell(r.forest_mae_raw, "%.6g"), 12)
          << lpad(cell(r.forest_r2), 10) << '\n';
      sensors.push_back({{"sensor_id", r.sensor_id},
                         {"name", spec.name},
                         {"ae_r2", detail::optional_real(r.ae_r2)},
                         {"k", r.k},
                         {"forest_mae", r.forest_mae},
                         {"forest_mae_units", r.forest_mae_raw},
                         {"forest_r2", detail::optional_real(r.forest_r2)}});
    }
    doc["sensors"] = std::move(sensors);

    if (o.truth) {
      std::ifstream tin(*o.truth);
      if (!tin) throw Error(Errc::io_error, "cannot open '" + o.truth->string() + "'");
      synthetic::GroundTruth truth = [&] {
        try {
          return synthetic::read_truth(tin, catalog);
        } catch (const Error& e) {
          throw Error(e.code(), "'" + o.truth->string() + "': " + e.detail());
        }
      }();
      const auto pipeline = artifact.pipeline();
      std::vector<MonitorReport> reports;
      reports.reserve(raw.size());
      for (const auto& f : raw.frames()) reports.push_back(process_frame(pipeline, f));
      const auto bench = synthetic::benchmark_report(reports, truth);

      out << "\nbenchmark: recall " << cell(bench.recall) << " over " << bench.faulted_entries
          << " faulted entries; false-Defective rate " << cell(bench.false_defective_rate, "%.6f") << " ("
          << bench.false_defective << " of " << bench.clean_entries << " clean entries)\n\n";
      out << pad("sensor", 28) << lpad("tp", 7) << lpad("fp", 7) << lpad("fn", 7) << lpad("precision", 11)
          << lpad("recall", 9) << lpad("latency", 9) << lpad("subst_mae", 12) << '\n';
      ojson bench_sensors = ojson::array();
      for (const auto& b : bench.sensors) {
        const auto& spec = catalog[b.sensor_id];
        out << pad(spec.name, 28) << lpad(std::to_string(b.true_positives), 7)
            << lpad(std::to_string(b.false_positives), 7) << lpad(std::to_string(b.false_negatives), 7)
            << lpad(cell(b.precision, "%.4f"), 11) << lpad(cell(b.recall, "%.4f"), 9)
            << lpad(cell(b.mean_detection_latency, "%.2f"), 9) << lpad(cell(b.substitution_mae, "%.5g"), 12)
            << '\n';
        bench_sensors.push_back({{"sensor_id", b.sensor_id},
                                 {"name", spec.name},
                                 {"true_positives", b.true_positives},
                                 {"false_positives", b.false_positives},
                                 {"false_negatives", b.false_negatives},
                                 {"true_negatives", b.true_negatives},
                                 {"precision", b.precision},
                                 {"recall", detail::optional_real(b.recall)},
                                 {"fault_windows", b.fault_windows},
                                 {"windows_detected", b.windows_detected},
                                 {"mean_detection_latency", detail::optional_real(b.mean_detection_latency)},
                                 {"substitution_mae", detail::optional_real(b.substitution_mae)},
                                 {"substitutions_scored", b.substitutions_scored}});
      }
      doc["benchmark"] = {{"recall", detail::optional_real(bench.recall)},
                          {"faulted_entries", bench.faulted_entries},
                          {"detected_entries", bench.detected_entries},
                          {"clean_frames", bench.clean_frames},
                          {"clean_entries", bench.clean_entries},
                          {"false_defective", bench.false_defective},
                          {"false_defective_rate", bench.false_defective_rate},
                          {"sensors", std::move(bench_sensors)}};
    }
    if (o.out) io::write_file_atomic(*o.out, doc.dump(1) + "\n");
    return kSuccess;
  });
}

inline int cmd_monitor(const MonitorOptions& o, std::istream& in, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, "monitor", [&] {
    const auto catalog = detail::resolve_catalog(o.catalog);
    const auto pipeline = read_artifact(o.artifact, catalog).pipeline(o.alert_threshold);

    std::ifstream file_in;
    std::istream* source = &in;
    if (o.input != "-") {
      file_in.open(o.input);
      if (!file_in) throw Error(Errc::io_error, "cannot open '" + o.input + "'");
      source = &file_in;
    }
    std::ofstream file_out;
    std::ostream* sink = &out;
    if (o.out != "-") {
      file_out.open(o.out, std::ios::trunc);
      if (!file_out) throw Error(Errc::io_error, "cannot write '" + o.out + "'");
      sink = &file_out;
    }
    std::ofstream alert_log(o.alert_log, std::ios::trunc);
    if (!alert_log) throw Error(Errc::io_error, "cannot write '" + o.alert_log.string() + "'");

    FrameReader reader(*source, catalog);
    const auto summary = process_stream(pipeline, reader, [&](const StreamRecord& record) {
      if (const auto* report = std::get_if<MonitorReport>(&record)) {
        *sink << report_to_json(*report, catalog).dump() << '\n';
        for (const auto& a : report->alerts) {
          alert_log << nlohmann::ordered_json{{"timestamp_ms", report->timestamp_ms},
                                              {"sensor_id", a.sensor_id},
                                              {"name", catalog[a.sensor_id].name},
                                              {"health", std::string(to_string(a.health))},
                                              {"message", a.message}}
                           .dump()
                    << '\n';
        }
      } else {
        *sink << error_to_json(std::get<StreamError>(record)).dump() << '\n';
      }
    });
    sink->flush();
    if (!*sink || !alert_log) throw Error(Errc::io_error, "failed writing monitor output");
    err << "monitor: " << summary.reports << " reports, " << summary.errors << " rejected records, "
        << summary.alerts << " alerts\n";
    return kSuccess;
  });
}

}  // namespace ecuhealth::cli
