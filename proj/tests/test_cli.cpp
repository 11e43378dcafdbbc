#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "horolab/experiments.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "horolab_cli_tests";

int run(const std::string& args, const std::string& log = "cli.log") {
  fs::create_directories(kWork);
  const std::string cmd = std::string(HOROLAB_CLI_PATH) + " " + args + " > " + (kWork / log).string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json report(const fs::path& dir) { return json::parse(slurp(dir / "report.json")); }

}  // namespace

TEST_CASE("oracle-check passes and echoes the effective config") {
  const fs::path out = kWork / "oracle";
  fs::remove_all(out);
  CHECK(run("run oracle-check --model constant --epsilon 1.0 --out " + out.string()) == 0);
  const json r = report(out);
  CHECK(r["pass"] == true);
  CHECK(r["library_version"] == horolab::kLibraryVersion);
  for (const char* key : {"experiment", "model", "epsilon", "p", "seed", "n", "kmax", "translation_length", "R", "T", "tol", "out"})
    CHECK(r["config"].contains(key));
  CHECK(r["config"]["p"] == 2.0);
  CHECK(r["config"]["model"]["kind"] == "constant");
  CHECK(r.contains("timing"));
  CHECK_FALSE(r["details"].contains("timing"));
}

TEST_CASE("cocycle-growth on the constant model") {
  const fs::path out = kWork / "growth";
  fs::remove_all(out);
  CHECK(run("run cocycle-growth --model constant --p 2 --kmax 8 --seed 7 --out " + out.string()) == 0);
  const json r = report(out);
  CHECK(r["details"]["verdict"] == "increasing");
  const std::string csv = slurp(out / "series.csv");
  CHECK(csv.rfind("k,norm_estimate,ci_low,ci_high,n_effective\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(csv.find(',') != std::string::npos);
  const std::string xy = slurp(out / "series.xy.csv");
  CHECK(xy.rfind("k,norm_estimate\n", 0) == 0);
  CHECK(fs::exists(out / "rn_nu_powers.csv"));
  CHECK(fs::exists(out / "samples.csv"));
}

TEST_CASE("config errors exit with 2 and write nothing") {
  const fs::path out = kWork / "bad";
  fs::remove_all(out);
  {
    std::ofstream os(kWork / "malformed.json");
    os << "{\"epsilon\": 0.5,";
  }
  CHECK(run("run oracle-check --config " + (kWork / "malformed.json").string() + " --out " + out.string()) == 2);
  CHECK_FALSE(fs::exists(out));
  {
    std::ofstream os(kWork / "unknown.json");
    os << R"({"epsilon": 0.5, "colour": "blue"})";
  }
  CHECK(run("run oracle-check --config " + (kWork / "unknown.json").string() + " --out " + out.string()) == 2);
  CHECK(slurp(kWork / "cli.log").find("colour") != std::string::npos);
  CHECK(run("run no-such-experiment --out " + out.string()) == 2);
  CHECK(run("run cocycle-growth --model constant --p 1 --out " + out.string()) == 2);
  CHECK(run("run holder --model hyperbolic --out " + out.string()) == 2);
  CHECK(run("run holder --epsilon -1 --out " + out.string()) == 2);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("failing metrics exit with 1 and are named") {
  const fs::path out = kWork / "fail";
  fs::remove_all(out);
  // A short ray horizon cannot resolve the Busemann limit.
  CHECK(run("run oracle-check --model constant --T 2 --out " + out.string()) == 1);
  CHECK(slurp(kWork / "cli.log").find("failing metric: busemann_closed_form") != std::string::npos);
  CHECK(report(out)["pass"] == false);
}

TEST_CASE("flags override the config file, which overrides defaults") {
  const fs::path out = kWork / "prec";
  fs::remove_all(out);
  {
    std::ofstream os(kWork / "prec.json");
    os << R"({"epsilon": 0.5, "seed": 99, "model": {"kind": "constant"}, "n": 40})";
  }
  CHECK(run("run holder --config " + (kWork / "prec.json").string() + " --epsilon 1.0 --out " + out.string()) == 0);
  const json c = report(out)["config"];
  CHECK(c["epsilon"] == 1.0);
  CHECK(c["seed"] == 99);
  CHECK(c["n"] == 40);
  CHECK(c["kmax"] == 8);
}

TEST_CASE("config layering in process") {
  horolab::ExperimentConfig c;
  c.experiment = "ahlfors";
  c = horolab::apply_config(c, json{{"model", {{"kind", "perturbed_axial"}, {"amplitude", 0.05}}}, {"epsilon", 0.25}});
  const horolab::ExperimentConfig r = horolab::resolve_config(c);
  CHECK(r.model.amplitude == 0.05);
  CHECK(r.model.a == 0.55);
  CHECK(r.p == 8.0);
  CHECK(r.translation_length == 3.0);
  CHECK(r.n == 64);
  CHECK_THROWS_AS(horolab::apply_config(c, json{{"model", {{"kind", "perturbed_axial"}, {"radius", 1}}}}), horolab::ConfigError);
  CHECK_THROWS_AS(horolab::apply_config(c, json{{"seed", "seven"}}), horolab::ConfigError);
  CHECK(horolab::format_csv_number(0.1) == "0.10000000000000001");
}

TEST_CASE("identical configs give identical reports") {
  const fs::path a = kWork / "det_a", b = kWork / "det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  CHECK(run("run quasimetric --model constant --n 2000 --seed 3 --out " + a.string()) == 0);
  CHECK(run("run quasimetric --model constant --n 2000 --seed 3 --out " + b.string()) == 0);
  json ra = report(a), rb = report(b);
  for (json* r : {&ra, &rb}) {
    r->erase("timing");
    (*r)["config"].erase("out");
  }
  CHECK(ra.dump() == rb.dump());
  CHECK(slurp(a / "quasimetric_sweep.csv") == slurp(b / "quasimetric_sweep.csv"));
}
