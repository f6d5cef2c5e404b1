#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <vector>

#include "clusterpdc/error.hpp"
#include "clusterpdc/timetag_io.hpp"
#include "support.hpp"

using namespace clusterpdc;
using namespace clusterpdc::timetag_io;
using montecarlo::TimetagRecord;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "clusterpdc_io_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::vector<TimetagRecord> random_tags(testsupport::Gen& g) {
  std::vector<TimetagRecord> tags;
  const int n = g.integer(0, 2000);
  std::uint64_t t = 0;
  for (int k = 0; k < n; ++k) {
    t += static_cast<std::uint64_t>(g.uniform(0.0, 1e9));
    tags.push_back({static_cast<std::uint8_t>(g.integer(0, 3)), t});
  }
  tags.push_back({1, 0xFFFF'FFFF'FFFFull * 1000});
  return tags;
}

}  // namespace

TEST_CASE("CSV and binary round trips") {
  testsupport::for_all(10, 81, [](testsupport::Gen& g, int i) {
    const auto tags = random_tags(g);
    for (auto f : {Format::Csv, Format::Binary}) {
      const auto p = scratch("rt" + std::to_string(i) + (f == Format::Binary ? ".bin" : ".csv"));
      write_timetags(p, tags, f);
      CHECK(read_timetags(p, f) == tags);
      CHECK(format_from_path(p) == f);
    }
  });
}

TEST_CASE("binary records are nine little-endian bytes") {
  const std::vector<TimetagRecord> tags{{2, 0x0102030405060708ull}};
  const auto p = scratch("le.bin");
  write_timetags(p, tags, Format::Binary);
  std::ifstream in(p, std::ios::binary);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  REQUIRE(bytes.size() == 9);
  CHECK(bytes[0] == 2);
  for (int k = 0; k < 8; ++k) CHECK(bytes[1 + k] == 8 - k);
}

TEST_CASE("CSV header names the unit") {
  const auto p = scratch("hdr.csv");
  write_timetags(p, std::vector<TimetagRecord>{{0, 12}}, Format::Csv);
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  CHECK(line == "channel,time_ps");
}

TEST_CASE("sidecar round trip and stream reading") {
  Sidecar s;
  s.format = Format::Binary;
  s.seed = 1234567890123ull;
  s.config_hash = "abc123";
  s.channel_map = {{0, "signal"}, {1, "idler"}};
  s.timing = {200e-9, 100e3, 1e-6, 42};
  s.ground_truth = {{"pairs", 17}};
  const auto p = scratch("stream.bin");
  const std::vector<TimetagRecord> tags{{0, 10}, {1, 20}};
  write_timetags(p, tags, s.format);
  write_sidecar(p, s);
  CHECK(sidecar_path(p).filename() == "stream.bin.json");
  const auto [back, side] = read_stream(p);
  CHECK(back == tags);
  CHECK(side.seed == s.seed);
  CHECK(side.config_hash == s.config_hash);
  CHECK(side.channel_map == s.channel_map);
  CHECK(side.timing.pulses == 42);
  CHECK(side.ground_truth == s.ground_truth);
}

TEST_CASE("truncated binary and malformed CSV are rejected") {
  const auto p = scratch("bad.bin");
  {
    std::ofstream out(p, std::ios::binary);
    out.write("\x01\x02\x03", 3);
  }
  CHECK_THROWS_AS(read_timetags(p, Format::Binary), Error);
  const auto q = scratch("bad.csv");
  {
    std::ofstream out(q);
    out << "channel,time_ps\n0,abc\n";
  }
  CHECK_THROWS_AS(read_timetags(q, Format::Csv), Error);
}
