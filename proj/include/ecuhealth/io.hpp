#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecuhealth/domain.hpp"
#include "ecuhealth/error.hpp"
#include "ecuhealth/text.hpp"

namespace ecuhealth::io {

inline constexpr std::string_view kTimestampColumn = "timestamp_ms";

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a sibling temporary and renames, so readers never observe
/// a half-written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot write '" + path.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(Errc::io_error, "write failed for '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::io_error, "cannot move result into '" + path.string() + "'");
  }
}

// ---------------------------------------------------------------------------
// Catalog document

inline nlohmann::ordered_json catalog_to_json(const SensorCatalog& catalog) {
  nlohmann::ordered_json sensors = nlohmann::ordered_json::array();
  for (const auto& s : catalog.sensors()) {
    sensors.push_back({{"name", s.name},
                       {"unit", s.unit},
                       {"min", s.physical_min},
                       {"max", s.physical_max},
                       {"kind", std::string(to_string(s.kind))},
                       {"forest_features", s.forest_features}});
  }
  return {{"sensors", std::move(sensors)}};
}

inline SensorCatalog catalog_from_json(const nlohmann::json& doc) {
  try {
    std::vector<SensorSpec> specs;
    const auto& arr = doc.at("sensors");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto& e = arr[i];
      SensorSpec s;
      s.id = i;
      s.name = e.at("name").get<std::string>();
      s.unit = e.value("unit", "");
      s.physical_min = e.at("min").get<double>();
      s.physical_max = e.at("max").get<double>();
      s.kind = parse_sensor_kind(e.value("kind", "continuous"));
      s.forest_features = e.value("forest_features", std::size_t{1});
      specs.push_back(std::move(s));
    }
    return SensorCatalog(std::move(specs));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::parse_error, std::string("catalog: ") + ex.what());
  }
}

inline SensorCatalog load_catalog(const std::filesystem::path& path) {
  const auto body = read_file(path);
  try {
    return catalog_from_json(nlohmann::json::parse(body));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::parse_error, "'" + path.string() + "': " + ex.what());
  }
}

// ---------------------------------------------------------------------------
// Telemetry CSV: timestamp_ms followed by the catalog names in order.

inline std::string telemetry_header(const SensorCatalog& catalog) {
  std::string line(kTimestampColumn);
  for (const auto& s : catalog.sensors()) {
    line += ',';
    line += s.name;
  }
  return line;
}

inline void check_telemetry_header(std::string_view line, const SensorCatalog& catalog) {
  line = text::trim(line);
  if (!line.empty() && static_cast<unsigned char>(line.front()) == 0xEF) line.remove_prefix(3);
  const auto expected = telemetry_header(catalog);
  if (line != expected) {
    throw Error(Errc::parse_error, "telemetry header does not match catalog; expected '" +
                                       expected + "'");
  }
}

inline std::string format_frame(const SensorFrame& frame) {
  std::string line = std::to_string(frame.timestamp_ms);
  for (double v : frame.values) {
    line += ',';
    line += text::shortest(v);
  }
  return line;
}

/// Parses one data row. Empty or non-numeric readings become NaN so that
/// they are treated as defective records downstream; a wrong column count
/// or a bad timestamp is a hard error for the row.
inline std::variant<SensorFrame, std::string> parse_frame(std::string_view line,
                                                          std::size_t n_sensors) {
  const auto fields = text::split(text::trim(line), ',');
  if (fields.size() != n_sensors + 1) {
    return "expected " + std::to_string(n_sensors + 1) + " columns, got " +
           std::to_string(fields.size());
  }
  const auto ts = text::parse_int(fields[0]);
  if (!ts) return "bad timestamp '" + std::string(fields[0]) + "'";
  SensorFrame frame{*ts, {}};
  frame.values.reserve(n_sensors);
  for (std::size_t i = 1; i < fields.size(); ++i) {
    frame.values.push_back(
        text::parse_real(fields[i]).value_or(std::numeric_limits<double>::quiet_NaN()));
  }
  return frame;
}

inline void write_telemetry(std::ostream& out, const Dataset& data) {
  out << telemetry_header(data.catalog()) << '\n';
  for (const auto& f : data.frames()) out << format_frame(f) << '\n';
}

inline std::string telemetry_to_string(const Dataset& data) {
  std::ostringstream ss;
  write_telemetry(ss, data);
  return ss.str();
}

inline Dataset read_telemetry(std::istream& in, const SensorCatalog& catalog) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::parse_error, "telemetry is empty");
  check_telemetry_header(line, catalog);
  Dataset data(catalog);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto parsed = parse_frame(line, catalog.size());
    if (auto* err = std::get_if<std::string>(&parsed)) {
      throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": " + *err);
    }
    data.push_back(std::move(std::get<SensorFrame>(parsed)));
  }
  return data;
}

inline Dataset load_telemetry(const std::filesystem::path& path, const SensorCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path.string() + "'");
  try {
    return read_telemetry(in, catalog);
  } catch (const Error& e) {
    throw Error(e.code(), "'" + path.string() + "': " + e.detail());
  }
}

}  // namespace ecuhealth::io
