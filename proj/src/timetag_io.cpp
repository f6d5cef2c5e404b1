#include "clusterpdc/timetag_io.hpp"

#include <array>
#include <charconv>
#include <fstream>

#include "clusterpdc/error.hpp"

namespace clusterpdc::timetag_io {

using montecarlo::TimetagRecord;

std::string to_string(Format f) { return f == Format::Binary ? "binary" : "csv"; }

Format format_from_string(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "binary") return Format::Binary;
  throw ConfigError("timetag format must be 'csv' or 'binary', got '" + s + "'");
}

Format format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".bin" ? Format::Binary : Format::Csv;
}

nlohmann::json Sidecar::to_json() const {
  nlohmann::json channels = nlohmann::json::object();
  for (const auto& [id, name] : channel_map) channels[std::to_string(id)] = name;
  return {{"format", to_string(format)}, {"record_bytes", format == Format::Binary ? 9 : 0},
          {"time_unit", "ps"},           {"seed", seed},
          {"config_hash", config_hash},  {"channel_map", channels},
          {"timing", timing.to_json()},  {"ground_truth", ground_truth}};
}

Sidecar Sidecar::from_json(const nlohmann::json& j) {
  try {
    Sidecar s;
    s.format = format_from_string(j.at("format").get<std::string>());
    s.seed = j.value("seed", std::uint64_t{0});
    s.config_hash = j.value("config_hash", std::string());
    if (j.contains("channel_map")) {
      for (const auto& [k, v] : j.at("channel_map").items()) s.channel_map[std::stoi(k)] = v.get<std::string>();
    }
    s.timing = montecarlo::PulseTiming::from_json(j.at("timing"));
    s.ground_truth = j.value("ground_truth", nlohmann::json::object());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed timetag sidecar: ") + e.what());
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& stream) {
  auto p = stream;
  p += ".json";
  return p;
}

void write_timetags(const std::filesystem::path& path, std::span<const TimetagRecord> tags, Format format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  if (format == Format::Csv) {
    out << "channel,time_ps\n";
    std::array<char, 32> buf{};
    for (const auto& r : tags) {
      char* p = std::to_chars(buf.data(), buf.data() + buf.size(), static_cast<unsigned>(r.channel)).ptr;
      *p++ = ',';
      p = std::to_chars(p, buf.data() + buf.size(), r.time_ps).ptr;
      *p++ = '\n';
      out.write(buf.data(), p - buf.data());
    }
  } else {
    std::array<char, 9> rec{};
    for (const auto& r : tags) {
      rec[0] = static_cast<char>(r.channel);
      for (int i = 0; i < 8; ++i) rec[1 + i] = static_cast<char>((r.time_ps >> (8 * i)) & 0xff);
      out.write(rec.data(), rec.size());
    }
  }
  if (!out) throw ComputationError("write failed for " + path.string());
}

std::vector<TimetagRecord> read_timetags(const std::filesystem::path& path, Format format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<TimetagRecord> tags;
  if (format == Format::Csv) {
    std::string line;
    std::getline(in, line);
    if (line.rfind("channel,time_ps", 0) != 0) throw ConfigError("timetag CSV lacks the 'channel,time_ps' header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto comma = line.find(',');
      unsigned ch = 0;
      std::uint64_t t = 0;
      const char* end = line.data() + line.size();
      if (!line.empty() && line.back() == '\r') --end;
      const auto r1 = std::from_chars(line.data(), line.data() + (comma == std::string::npos ? 0 : comma), ch);
      const auto r2 = comma == std::string::npos ? std::from_chars_result{nullptr, std::errc::invalid_argument}
                                                 : std::from_chars(line.data() + comma + 1, end, t);
      if (r1.ec != std::errc() || r2.ec != std::errc() || r2.ptr != end || ch > 255) {
        throw ConfigError("malformed timetag record at " + path.string() + ":" + std::to_string(lineno));
      }
      tags.push_back({static_cast<std::uint8_t>(ch), t});
    }
  } else {
    std::array<unsigned char, 9> rec{};
    while (in.read(reinterpret_cast<char*>(rec.data()), rec.size())) {
      std::uint64_t t = 0;
      for (int i = 0; i < 8; ++i) t |= static_cast<std::uint64_t>(rec[1 + i]) << (8 * i);
      tags.push_back({rec[0], t});
    }
    if (in.gcount() != 0) throw ConfigError("truncated binary timetag record in " + path.string());
  }
  return tags;
}

void write_sidecar(const std::filesystem::path& stream, const Sidecar& sidecar) {
  std::ofstream out(sidecar_path(stream));
  if (!out) throw ConfigError("cannot write " + sidecar_path(stream).string());
  out << sidecar.to_json().dump(2) << '\n';
}

Sidecar read_sidecar(const std::filesystem::path& stream) {
  std::ifstream in(sidecar_path(stream));
  if (!in) throw ConfigError("missing sidecar " + sidecar_path(stream).string());
  try {
    return Sidecar::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("cannot parse sidecar: ") + e.what());
  }
}

std::pair<std::vector<TimetagRecord>, Sidecar> read_stream(const std::filesystem::path& stream) {
  Sidecar s = read_sidecar(stream);
  return {read_timetags(stream, s.format), s};
}

}  // namespace clusterpdc::timetag_io
