#include <atomic>
#include <stdexcept>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "dmatwin/control_proto.hpp"
#include "dmatwin/harness/commands.hpp"
#include "dmatwin/harness/config.hpp"
#include "dmatwin/harness/manifest.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace dmatwin;
using namespace dmatwin::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  static std::atomic<int> counter{0};
  const fs::path p = fs::temp_directory_path() /
                     ("dmatwin_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

int run(const std::string& cmd, const std::string& ini, const fs::path& dir) {
  const auto cfg = resolve_config(parse_ini(ini, "test.ini"), dir);
  std::ostringstream log, err;
  return run_command(cmd, cfg, log, err);
}

}  // namespace

TEST_CASE("ini parsing") {
  const auto doc = parse_ini("# comment\n[run]\nseed = 42\n\n[link]\n; another\nangles = -10, 0, 10\n");
  REQUIRE(doc.find("run", "seed"));
  CHECK(doc.find("run", "seed")->text == "42");
  CHECK(doc.find("run", "seed")->line == 3);
  CHECK(doc.find("link", "angles")->text == "-10, 0, 10");
  CHECK(doc.find("link", "missing") == nullptr);
}

TEST_CASE("ini errors carry line numbers") {
  auto line_of = [](const std::string& text) {
    try {
      resolve_config(parse_ini(text, "bad.ini"), ".");
    } catch (const ConfigError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("seed = 1\n") == 1);
  CHECK(line_of("[run]\nseed = 1\nseed = 2\n") == 3);
  CHECK(line_of("[run\n") == 1);
  CHECK(line_of("[run]\n\nnot a pair\n") == 3);
  CHECK(line_of("[run]\nseeds = 4\n") == 2);
  CHECK(line_of("[link]\ndistance_m = -1\n") == 2);
  CHECK(line_of("[link]\ndistance_m = 1.0m\n") == 2);
  CHECK(line_of("[em]\nmodel = exotic\n") == 2);
  CHECK(line_of("[bogus]\nx = 1\n") >= 1);
  try {
    resolve_config(parse_ini("[codes]\n\ncodes = 0x9249, 0x1FFFF\n", "bad.ini"), ".");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("bad.ini:3") != std::string::npos);
  }
}

TEST_CASE("code tokens") {
  CHECK(parse_code("0x9249", 16).value() == 0x9249);
  CHECK(parse_code("0b1001001001001001", 16).value() == 0x9249);
  CHECK(parse_code("1001001001001001", 16).value() == 0x9249);
  CHECK(parse_code("37449", 16).value() == 0x9249);
  CHECK(parse_code("1001", 16, "bin").value() == 9);
  CHECK(parse_code("1001", 16).value() == 1001);
  CHECK(parse_code("ff", 16, "hex").value() == 0xFF);
  CHECK_THROWS(parse_code("0x10000", 16));
  CHECK_THROWS(parse_code("65536", 16));
  CHECK_THROWS(parse_code("0xZZ", 16));
  CHECK_THROWS(parse_code("", 16));
}

TEST_CASE("csv round trip") {
  const auto t = parse_csv("a,b,c\n1,2,3\n4,,6\n");
  REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][1].empty());
  CHECK_THROWS(parse_csv("a,b\n1,2,3\n"));
}

TEST_CASE("targets file") {
  const auto dir = scratch("targets");
  write_file(dir / "t.csv",
             "label,code,angles_deg,tolerance_deg,weight\n"
             "one,1001001001001001,-35;2,10,1\n"
             "flat,0xFFFF,0,2,100\n");
  const auto t = load_targets(dir / "t.csv", 16);
  REQUIRE(t.size() == 2);
  CHECK(t[0].code.value() == 0x9249);
  REQUIRE(t[0].lobes.size() == 2);
  CHECK(t[0].lobes[0].angle_deg == -35.0);
  CHECK(t[0].lobes[1].angle_deg == 2.0);
  CHECK(t[1].weight == 100.0);
  write_file(dir / "empty.csv", "");
  CHECK_THROWS_AS(load_targets(dir / "empty.csv", 16), ConfigError);
  write_file(dir / "header_only.csv", "label,code,angles_deg,tolerance_deg,weight\n");
  CHECK_THROWS_AS(load_targets(dir / "header_only.csv", 16), ConfigError);
  const std::string ini = "[calibrate]\ntargets = empty.csv\n";
  CHECK(run("calibrate", ini + "[run]\nout = o\n", dir) == kExitConfig);
  fs::remove_all(dir);
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 1, 0) == derive_seed(1, 1, 0));
  CHECK(derive_seed(1, 1, 0) != derive_seed(1, 1, 1));
  CHECK(derive_seed(1, 1, 0) != derive_seed(1, 2, 0));
  CHECK(derive_seed(1, 1, 0) != derive_seed(2, 1, 0));
  // Reference value of the splitmix64 finalizer for input 0.
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFull);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  CHECK(run("nonsense", "[run]\nout = o\n", dir) == kExitConfig);
  CHECK(run("link", "[run]\nout = o\n[link]\nangles = 0\n", dir) == kExitConfig);  // no seed
  CHECK(run("proto-trace", "[run]\nout = o\n[proto]\ninput = missing.bin\n", dir) == kExitIo);
  write_file(dir / "file_in_the_way", "x");
  CHECK(run("pattern", "[run]\nout = file_in_the_way\n[codes]\ncodes = 0xFFFF\n", dir) == kExitIo);
  fs::remove_all(dir);
}

TEST_CASE("pattern command outputs") {
  const auto dir = scratch("pattern");
  const std::string ini = "[run]\nout = o\n[codes]\ncodes = 0x9249, 1001001001001001, 0xFFFF\n[em]\ngrid_step = 0.5\n";
  REQUIRE(run("pattern", ini, dir) == kExitOk);
  CHECK(fs::exists(dir / "o" / "pattern_9249.csv"));
  CHECK(fs::exists(dir / "o" / "pattern_FFFF.csv"));
  const auto summary = read_csv(dir / "o" / "beam_summary.csv");
  CHECK(summary.rows.size() == 3);
  CHECK(summary.rows[0][0] == "0x9249");
  const auto manifest = nlohmann::json::parse(slurp(dir / "o" / "manifest.json"));
  CHECK(manifest["command"] == "pattern");
  CHECK(manifest["seed"].is_null());
  CHECK(manifest["outputs"].size() == 3);
  for (const auto& o : manifest["outputs"])
    CHECK(o["sha256"] == sha256_file(dir / "o" / o["file"].get<std::string>()));
  fs::remove_all(dir);
}

TEST_CASE("search on a small array finds the code whose lobes define the spec") {
  const auto dir = scratch("search");
  const auto g = [] {
    auto g = em::calibrated_geometry();
    g.n_elements = 8;
    return g;
  }();
  const auto m = em::calibrated_element();
  const em::CodeWord code(0b10010011, 8);
  const auto s = em::beam_summary(em::array_pattern(g, m, code, 62e9, em::angle_grid(-90, 90, 0.5)));
  std::string targets;
  for (const auto& l : s.lobes) targets += (targets.empty() ? "" : ", ") + std::to_string(l.angle_deg) + ":0.5";
  const std::string ini = "[run]\nout = o\n[em]\nn_elements = 8\ngrid_step = 0.5\n[search]\ntargets = " + targets +
                          "\nrequired_beams = " + std::to_string(s.n_beams) + "\n";
  REQUIRE(run("search", ini, dir) == kExitOk);
  const auto all = read_csv(dir / "o" / "codebook_metrics.csv");
  CHECK(all.rows.size() == 256);
  const auto ranked = read_csv(dir / "o" / "codebook_ranked.csv");
  REQUIRE_FALSE(ranked.rows.empty());
  bool found = false;
  for (const auto& row : ranked.rows) found = found || row[0] == "0x93";
  CHECK(found);
  CHECK(run("search", "[run]\nout = o2\n[em]\nn_elements = 8\n[search]\ntargets = 89.9:0.01\n", dir) ==
        kExitInfeasible);
  fs::remove_all(dir);
}

TEST_CASE("reruns are byte identical") {
  const auto dir = scratch("repro");
  std::vector<std::uint8_t> bytes;
  for (const auto& c : std::vector<proto::ControlCommand>{proto::SetCodeList{{0x9249, 0x6DB6}},
                                                          proto::SetSwitchInterval{100}, proto::SetMode{proto::Mode::Multi}}) {
    const auto f = proto::encode(c);
    bytes.insert(bytes.end(), f.begin(), f.end());
  }
  write_file(dir / "cmds.bin", std::string(bytes.begin(), bytes.end()));
  const std::string common = "[link]\nangles = 0, 10\nsnr_sweep = 2, 8\npayload_bytes = 3000\n"
                             "[proto]\ninput = cmds.bin\nticks = 2000\n[codes]\ncodes = 0xFFFF\n";
  for (const std::string cmd : {"link", "proto-trace", "pattern"}) {
    REQUIRE(run(cmd, "[run]\nseed = 7\nout = a\n" + common, dir) == kExitOk);
    REQUIRE(run(cmd, "[run]\nseed = 7\nout = b\n" + common, dir) == kExitOk);
    for (const auto& e : fs::directory_iterator(dir / "a"))
      CHECK_MESSAGE(slurp(e.path()) == slurp(dir / "b" / e.path().filename()), cmd << ": " << e.path().filename());
    if (cmd == "link") {
      REQUIRE(run(cmd, "[run]\nseed = 8\nout = c\n" + common, dir) == kExitOk);
      CHECK(slurp(dir / "a" / "ber_vs_snr.csv") != slurp(dir / "c" / "ber_vs_snr.csv"));
      fs::remove_all(dir / "c");
    }
    fs::remove_all(dir / "a");
    fs::remove_all(dir / "b");
  }
  fs::remove_all(dir);
}
