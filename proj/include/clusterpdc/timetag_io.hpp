#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "clusterpdc/montecarlo.hpp"

namespace clusterpdc::timetag_io {

/// CSV: header `channel,time_ps`, one record per line.
/// Binary: packed 9-byte records, 1-byte channel then little-endian u64 picoseconds.
enum class Format { Csv, Binary };

std::string to_string(Format f);
Format format_from_string(const std::string& s);
/// ".bin" selects Binary, anything else Csv.
Format format_from_path(const std::filesystem::path& path);

struct Sidecar {
  Format format = Format::Csv;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::map<int, std::string> channel_map;
  montecarlo::PulseTiming timing;
  nlohmann::json ground_truth = nlohmann::json::object();

  [[nodiscard]] nlohmann::json to_json() const;
  static Sidecar from_json(const nlohmann::json& j);
};

/// `stream.csv` -> `stream.csv.json`
std::filesystem::path sidecar_path(const std::filesystem::path& stream);

void write_timetags(const std::filesystem::path& path, std::span<const montecarlo::TimetagRecord> tags, Format format);
std::vector<montecarlo::TimetagRecord> read_timetags(const std::filesystem::path& path, Format format);

void write_sidecar(const std::filesystem::path& stream, const Sidecar& sidecar);
Sidecar read_sidecar(const std::filesystem::path& stream);

/// Reads a stream and its sidecar; the sidecar's format field decides the decoder.
std::pair<std::vector<montecarlo::TimetagRecord>, Sidecar> read_stream(const std::filesystem::path& stream);

}  // namespace clusterpdc::timetag_io
