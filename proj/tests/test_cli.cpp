#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "cylevo/io.hpp"

using namespace cylevo;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int exit_code;
  std::string output;  // stdout + stderr interleaved
};

Invocation run(const std::string& args) {
  const std::string cmd = std::string(CYLEVO_BIN) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof(buf), pipe))
    output.append(buf, n);
  const int status = pclose(pipe);
  return Invocation{WEXITSTATUS(status), output};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("cylevo_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("help documents every flag with its default") {
  const Invocation top = run("--help");
  CHECK(top.exit_code == 0);
  for (const char* sub :
       {"fit", "synth", "shapley", "rethreshold", "export-mesh"})
    CHECK(top.output.find(sub) != std::string::npos);

  const Invocation fit = run("fit --help");
  CHECK(fit.exit_code == 0);
  for (const char* flag :
       {"--input", "--output", "--format", "--mesh", "--mesh-segments",
        "--alpha", "--growth-k", "--pop-min", "--tau", "--object-hint",
        "--generations", "--seed", "--eta-m", "--eta-c", "--crossover-rate",
        "--radial-tolerance", "--operators", "--threads", "--r-min", "--r-max",
        "--l-min", "--l-max", "--verbose"})
    CHECK_MESSAGE(fit.output.find(flag) != std::string::npos, flag);
  // spot-check documented defaults
  CHECK(fit.output.find("0.5") != std::string::npos);   // alpha
  CHECK(fit.output.find("50") != std::string::npos);    // pop-min
  CHECK(fit.output.find("all") != std::string::npos);   // operators

  const Invocation synth = run("synth --help");
  for (const char* flag :
       {"generator", "--output", "--cloud-format", "--seed", "--radius",
        "--length", "--axial-n", "--circ-n", "--jitter", "--jitter-mode",
        "--completeness", "--ring-radius", "--tube-radius", "--focal-offset",
        "--res-u", "--res-v"})
    CHECK_MESSAGE(synth.output.find(flag) != std::string::npos, flag);

  const Invocation shapley = run("shapley --help");
  for (const char* flag : {"--budget", "--replicates", "--start",
                           "--additive-self-test", "--task-radius"})
    CHECK_MESSAGE(shapley.output.find(flag) != std::string::npos, flag);

  const Invocation rt = run("rethreshold --help");
  CHECK(rt.output.find("--alpha") != std::string::npos);
  const Invocation exm = run("export-mesh --help");
  CHECK(exm.output.find("--segments") != std::string::npos);
}

TEST_CASE("usage errors exit with code 1") {
  CHECK(run("").exit_code == 1);
  CHECK(run("frobnicate").exit_code == 1);
  CHECK(run("fit").exit_code == 1);  // missing required --input
  const Invocation bad = run("synth pyramid -o /tmp/x");
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("cylinder") != std::string::npos);  // lists valid names
  CHECK(bad.output.find("cyclide") != std::string::npos);
}

TEST_CASE("data errors exit with code 2") {
  const Invocation missing = run("fit -i /nonexistent/cloud.xyz -o /tmp/out.json");
  CHECK(missing.exit_code == 2);
  CHECK(missing.output.find("error") != std::string::npos);
}

TEST_CASE("synth then fit end-to-end, deterministic and re-thresholdable") {
  TempDir tmp;
  const Invocation synth =
      run("synth cylinder -o " + tmp.file("scene") +
          " --axial-n 40 --circ-n 16 --length 6 --radius 0.8 --seed 5");
  REQUIRE(synth.exit_code == 0);
  REQUIRE(fs::exists(tmp.file("scene.xyz")));
  REQUIRE(fs::exists(tmp.file("scene.json")));

  const std::string fit_flags =
      " --pop-min 16 --generations 25 --seed 9 --tau 0.4 --alpha 0.4";
  const Invocation fit1 = run("fit -i " + tmp.file("scene.xyz") + " -o " +
                              tmp.file("r1.json") + fit_flags);
  REQUIRE(fit1.exit_code == 0);
  const Invocation fit2 = run("fit -i " + tmp.file("scene.xyz") + " -o " +
                              tmp.file("r2.json") + fit_flags);
  REQUIRE(fit2.exit_code == 0);
  CHECK(slurp(tmp.file("r1.json")) == slurp(tmp.file("r2.json")));

  const FitResult result = read_result(tmp.file("r1.json"));
  CHECK(result.generations.size() == 26);
  // the adaptive size law links consecutive generation reports
  for (std::size_t g = 1; g < result.generations.size(); ++g) {
    const int n_prev = result.generations[g - 1].accepted_count;
    CHECK(result.generations[g].population_size ==
          std::max(static_cast<int>(std::ceil(2.0 * n_prev)), 16));
  }
  CHECK(result.population.size() ==
        std::size_t(result.generations.back().population_size));

  // progress lines mention generations and population sizes
  CHECK(fit1.output.find("gen ") != std::string::npos);
  CHECK(fit1.output.find("pop ") != std::string::npos);

  // lowering alpha can only widen the accepted set
  const Invocation rt = run("rethreshold -i " + tmp.file("r1.json") + " -o " +
                            tmp.file("r_low.json") + " --alpha 0.1");
  REQUIRE(rt.exit_code == 0);
  const FitResult lowered = read_result(tmp.file("r_low.json"));
  REQUIRE(lowered.population.size() == result.population.size());
  for (std::size_t i = 0; i < result.population.size(); ++i)
    if (result.population[i].accepted) CHECK(lowered.population[i].accepted);

  // alpha outside [0, 1] is rejected for rethreshold
  CHECK(run("rethreshold -i " + tmp.file("r1.json") + " -o " +
            tmp.file("bad.json") + " --alpha 1.5")
            .exit_code == 1);

  // mesh export of whatever was accepted
  const Invocation exm = run("export-mesh -i " + tmp.file("r_low.json") +
                             " -o " + tmp.file("mesh.obj") + " --segments 8");
  REQUIRE(exm.exit_code == 0);
  CHECK(fs::exists(tmp.file("mesh.obj")));
}

TEST_CASE("fit with an unattainable threshold still writes a valid result") {
  TempDir tmp;
  REQUIRE(run("synth cylinder -o " + tmp.file("scene") +
              " --axial-n 30 --circ-n 12 --seed 3")
              .exit_code == 0);
  const Invocation fit =
      run("fit -i " + tmp.file("scene.xyz") + " -o " + tmp.file("r.json") +
          " --alpha 1.01 --pop-min 12 --generations 10 --tau 0.6 --seed 2");
  REQUIRE(fit.exit_code == 0);
  const FitResult result = read_result(tmp.file("r.json"));
  CHECK(result.accepted().empty());
  for (const GenerationReport& rep : result.generations) {
    CHECK(rep.accepted_count == 0);
    CHECK(rep.population_size == 12);  // max(ceil(k*0), p_min)
  }
}

TEST_CASE("synth cyclide writes a scene with empty ground truth") {
  TempDir tmp;
  const Invocation synth = run("synth cyclide -o " + tmp.file("cyc") +
                               " --res-u 24 --res-v 12 --cloud-format ply");
  REQUIRE(synth.exit_code == 0);
  CHECK(fs::exists(tmp.file("cyc.ply")));
  const std::string scene_json = slurp(tmp.file("cyc.json"));
  CHECK(scene_json.find("\"ground_truth\": []") != std::string::npos);

  // the generated ply parses back
  const PointCloud cloud = read_cloud(tmp.file("cyc.ply"));
  CHECK(cloud.size() == 24u * 12u);
}

TEST_CASE("shapley additive self-test recovers weights exactly") {
  TempDir tmp;
  const Invocation inv = run("shapley --additive-self-test -o " +
                             tmp.file("add.json") + " --seed 11");
  REQUIRE(inv.exit_code == 0);
  const std::string report = slurp(tmp.file("add.json"));
  CHECK(report.find("\"pass\": true") != std::string::npos);
}

TEST_CASE("shapley run is deterministic and efficient") {
  TempDir tmp;
  const std::string flags =
      " --budget 30 --replicates 1 --seed 21 --task-axial-n 30 --task-circ-n 12"
      " --tau 0.5 --threads 2 -o ";
  REQUIRE(run("shapley" + flags + tmp.file("s1.json")).exit_code == 0);
  REQUIRE(run("shapley" + flags + tmp.file("s2.json")).exit_code == 0);
  CHECK(slurp(tmp.file("s1.json")) == slurp(tmp.file("s2.json")));

  std::ifstream in(tmp.file("s1.json"));
  nlohmann::json j;
  in >> j;
  CHECK(std::abs(j.at("efficiency_residual").get<double>()) < 1e-9);
  CHECK(j.at("ranking").size() == 7);
}
