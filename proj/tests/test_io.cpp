#include "cylevo/io.hpp"

#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cylevo/rng.hpp"
#include "cylevo/synthetic.hpp"

using namespace cylevo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("cylevo_test_" + std::to_string(Rng(std::random_device{}())()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path file(const std::string& name) const { return path / name; }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

PointCloud random_cloud(std::size_t n, Rng& rng) {
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    pts.emplace_back(uniform_in(rng, -100, 100), uniform_in(rng, -100, 100),
                     uniform_in(rng, -100, 100));
  return PointCloud(std::move(pts));
}

FitResult sample_result(std::size_t n_solutions, Rng& rng) {
  FitResult result;
  result.alpha = 0.5;
  result.config.tau = 0.31;
  result.config.rng_seed = 123456789ULL;
  ParameterBounds b;
  b.box_lo = Vec3(-3, -4, -5);
  b.box_hi = Vec3(3, 4, 5);
  b.l_min = 0.1;
  b.l_max = 12.0;
  b.r_min = 0.05;
  b.r_max = 6.0;
  result.config.bounds = b;
  result.input_descriptor = "synthetic";
  for (std::size_t i = 0; i < n_solutions; ++i) {
    SolutionRecord rec;
    rec.cylinder = Cylinder{uniform_in(rng, -3, 3), uniform_in(rng, -3, 3),
                            uniform_in(rng, -3, 3), uniform_in(rng, -3, 3),
                            uniform_in(rng, 0, 6),  uniform_in(rng, 0.1, 9),
                            uniform_in(rng, 0.1, 2)};
    rec.potential_fitness = uniform01(rng);
    rec.realized_fitness = rec.potential_fitness * uniform01(rng);
    rec.accepted = rec.realized_fitness >= result.alpha;
    result.population.push_back(rec);
  }
  GenerationReport rep;
  rep.generation = 0;
  rep.population_size = 50;
  rep.best_realized = 0.25;
  rep.accepted_count = 0;
  rep.operator_applications = {1, 2, 3, 4, 5, 6, 7};
  result.generations.push_back(rep);
  return result;
}

}  // namespace

TEST_CASE("xyz: three hand-checked points") {
  TempDir tmp;
  write_text(tmp.file("pts.xyz"), "0 0 0\n1 0 0\n0 1 0\n");
  const PointCloud cloud = read_cloud(tmp.file("pts.xyz"));
  REQUIRE(cloud.size() == 3);
  CHECK(cloud[0] == Vec3(0, 0, 0));
  CHECK(cloud[1] == Vec3(1, 0, 0));
  CHECK(cloud[2] == Vec3(0, 1, 0));
  CHECK(cloud.bounds().lo == Vec3(0, 0, 0));
  CHECK(cloud.bounds().hi == Vec3(1, 1, 0));
}

TEST_CASE("xyz: malformed rows are rejected with a line number") {
  TempDir tmp;
  write_text(tmp.file("bad.xyz"), "0 0 0\n1 0\n");
  CHECK_THROWS_WITH_AS(read_cloud(tmp.file("bad.xyz")),
                       doctest::Contains(":2:"), DataError);
  write_text(tmp.file("junk.xyz"), "0 0 0\n1 0 0 extra\n");
  CHECK_THROWS_AS(read_cloud(tmp.file("junk.xyz")), DataError);
  write_text(tmp.file("empty.xyz"), "\n\n");
  CHECK_THROWS_WITH_AS(read_cloud(tmp.file("empty.xyz")),
                       doctest::Contains("empty cloud"), DataError);
  CHECK_THROWS_AS(read_cloud(tmp.file("missing.xyz")), DataError);
}

TEST_CASE("ply: ascii and binary round trips are coordinate-exact") {
  TempDir tmp;
  Rng rng = make_rng(163);
  const PointCloud cloud = random_cloud(100000, rng);

  for (CloudFormat fmt : {CloudFormat::PlyAscii, CloudFormat::PlyBinaryLE}) {
    const fs::path p = tmp.file(fmt == CloudFormat::PlyAscii ? "a.ply" : "b.ply");
    write_cloud(cloud, p, fmt);
    const PointCloud back = read_cloud(p);
    REQUIRE(back.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) CHECK(back[i] == cloud[i]);
  }
}

TEST_CASE("ply: float coordinates widen to double") {
  TempDir tmp;
  std::ostringstream os;
  os << "ply\nformat ascii 1.0\nelement vertex 2\n"
     << "property float x\nproperty float y\nproperty float z\n"
     << "property uchar red\nend_header\n"
     << "1.5 2.5 3.5 255\n-1 0.25 9 0\n";
  write_text(tmp.file("f.ply"), os.str());
  const PointCloud cloud = read_cloud(tmp.file("f.ply"));
  REQUIRE(cloud.size() == 2);
  CHECK(cloud[0] == Vec3(1.5, 2.5, 3.5));  // extra property ignored
  CHECK(cloud[1] == Vec3(-1, 0.25, 9));
}

TEST_CASE("ply: vertex count shortfall is reported") {
  TempDir tmp;
  write_text(tmp.file("short.ply"),
             "ply\nformat ascii 1.0\nelement vertex 5\n"
             "property float x\nproperty float y\nproperty float z\n"
             "end_header\n0 0 0\n1 1 1\n2 2 2\n3 3 3\n");
  CHECK_THROWS_WITH_AS(read_cloud(tmp.file("short.ply")),
                       doctest::Contains("declares 5 records but only 4"),
                       DataError);
}

TEST_CASE("ply: malformed headers are rejected") {
  TempDir tmp;
  write_text(tmp.file("nomagic.ply"), "plyx\nend_header\n");
  CHECK_THROWS_AS(read_cloud(tmp.file("nomagic.ply")), DataError);
  write_text(tmp.file("badfmt.ply"),
             "ply\nformat binary_big_endian 1.0\nend_header\n");
  CHECK_THROWS_AS(read_cloud(tmp.file("badfmt.ply")), DataError);
  write_text(tmp.file("novertex.ply"),
             "ply\nformat ascii 1.0\nelement face 0\n"
             "property list uchar int vertex_indices\nend_header\n");
  CHECK_THROWS_WITH_AS(read_cloud(tmp.file("novertex.ply")),
                       doctest::Contains("no vertex element"), DataError);
}

TEST_CASE("ply: faces and list properties are skipped") {
  TempDir tmp;
  write_text(tmp.file("mesh.ply"),
             "ply\nformat ascii 1.0\n"
             "element vertex 3\n"
             "property double x\nproperty double y\nproperty double z\n"
             "element face 1\nproperty list uchar int vertex_indices\n"
             "end_header\n"
             "0 0 0\n1 0 0\n0 1 0\n"
             "3 0 1 2\n");
  const PointCloud cloud = read_cloud(tmp.file("mesh.ply"));
  CHECK(cloud.size() == 3);
}

TEST_CASE("result files: empty result round trips") {
  TempDir tmp;
  Rng rng = make_rng(167);
  FitResult result = sample_result(0, rng);
  write_result(result, tmp.file("r.json"));
  const FitResult back = read_result(tmp.file("r.json"));
  CHECK(back.population.empty());
  CHECK(back.alpha == result.alpha);
  CHECK(back.config.tau == result.config.tau);
  CHECK(back.generations.size() == 1);
}

TEST_CASE("result files: 500 cylinders round trip field-exact") {
  TempDir tmp;
  Rng rng = make_rng(173);
  const FitResult result = sample_result(500, rng);
  write_result(result, tmp.file("r.json"));
  const FitResult back = read_result(tmp.file("r.json"));
  REQUIRE(back.population.size() == 500);
  for (std::size_t i = 0; i < 500; ++i) {
    CHECK(back.population[i].cylinder == result.population[i].cylinder);
    CHECK(back.population[i].potential_fitness ==
          result.population[i].potential_fitness);
    CHECK(back.population[i].realized_fitness ==
          result.population[i].realized_fitness);
    CHECK(back.population[i].accepted == result.population[i].accepted);
  }
  CHECK(back.config.rng_seed == result.config.rng_seed);
  REQUIRE(back.config.bounds.has_value());
  CHECK(back.config.bounds->box_lo == result.config.bounds->box_lo);
  CHECK(back.generations[0].operator_applications ==
        result.generations[0].operator_applications);
}

TEST_CASE("result files: schema version mismatch is an error") {
  TempDir tmp;
  write_text(tmp.file("v9.json"), "{\"schema_version\": 9}\n");
  CHECK_THROWS_WITH_AS(read_result(tmp.file("v9.json")),
                       doctest::Contains("schema version 9"), DataError);
  write_text(tmp.file("none.json"), "{}\n");
  CHECK_THROWS_AS(read_result(tmp.file("none.json")), DataError);
  write_text(tmp.file("garbage.json"), "not json at all\n");
  CHECK_THROWS_AS(read_result(tmp.file("garbage.json")), DataError);
}

TEST_CASE("rethreshold: accepted set shrinks and grows monotonically") {
  Rng rng = make_rng(179);
  FitResult result = sample_result(200, rng);

  const auto accepted_at = [&](double alpha) {
    std::set<std::size_t> ids;
    const FitResult r = rethreshold(result, alpha);
    for (std::size_t i = 0; i < r.population.size(); ++i)
      if (r.population[i].accepted) ids.insert(i);
    return ids;
  };

  const auto at_03 = accepted_at(0.3);
  const auto at_05 = accepted_at(0.5);
  const auto at_08 = accepted_at(0.8);
  for (std::size_t id : at_08) CHECK(at_05.contains(id));
  for (std::size_t id : at_05) CHECK(at_03.contains(id));

  CHECK(accepted_at(0.0).size() == result.population.size());
  CHECK_THROWS_AS(rethreshold(result, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(rethreshold(result, -0.1), std::invalid_argument);
}

TEST_CASE("mesh export: counts, surface accuracy, manifoldness") {
  TempDir tmp;
  const Cylinder unit{0, 0, 0, std::numbers::pi / 2.0, std::numbers::pi / 2.0,
                      2.0, 1.0};
  const std::vector<Cylinder> cyls{unit,
                                   Cylinder{3, 1, -2, 0.3, 1.2, 4.0, 0.5}};

  for (int segments : {3, 24}) {
    const fs::path p = tmp.file("mesh" + std::to_string(segments) + ".obj");
    export_mesh(cyls, p, segments);

    std::ifstream in(p);
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> faces;
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string tag;
      ls >> tag;
      if (tag == "v") {
        double x, y, z;
        ls >> x >> y >> z;
        verts.emplace_back(x, y, z);
      } else if (tag == "f") {
        std::array<int, 3> f{};
        ls >> f[0] >> f[1] >> f[2];
        faces.push_back(f);
      }
    }
    CHECK(verts.size() == cyls.size() * (2 * std::size_t(segments) + 2));
    CHECK(faces.size() == cyls.size() * 4 * std::size_t(segments));

    // every vertex lies on the lateral surface or on a cap plane
    const std::size_t per = 2 * std::size_t(segments) + 2;
    for (std::size_t ci = 0; ci < cyls.size(); ++ci) {
      const Cylinder& c = cyls[ci];
      for (std::size_t k = 0; k < per; ++k) {
        const Vec3& v = verts[ci * per + k];
        const Vec3 d = v - c.center();
        const double along = d.dot(c.axis());
        const double rad = (d - along * c.axis()).norm();
        CHECK(std::abs(std::abs(along) - c.l / 2.0) < 1e-9);  // on a cap plane
        const bool on_surface = std::abs(rad - c.r) < 1e-9;
        const bool on_axis = rad < 1e-9;
        CHECK((on_surface || on_axis));
      }
    }

    // 2-manifold: every undirected edge is shared by exactly two triangles
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& f : faces) {
      for (int e = 0; e < 3; ++e) {
        int a = f[std::size_t(e)], b = f[std::size_t((e + 1) % 3)];
        if (a > b) std::swap(a, b);
        edge_count[{a, b}] += 1;
      }
    }
    for (const auto& [edge, count] : edge_count) CHECK(count == 2);
  }

  // zero cylinders still writes a valid (empty) file
  export_mesh(std::vector<Cylinder>{}, tmp.file("empty.obj"), 8);
  std::ifstream in(tmp.file("empty.obj"));
  CHECK(in.good());
  CHECK_THROWS_AS(export_mesh(cyls, tmp.file("x.obj"), 2),
                  std::invalid_argument);
}

TEST_CASE("spatial index: queries equal brute force") {
  Rng rng = make_rng(181);
  const PointCloud cloud = random_cloud(2000, rng);
  const UniformGridIndex index(cloud, 7.5);

  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 center(uniform_in(rng, -110, 110), uniform_in(rng, -110, 110),
                      uniform_in(rng, -110, 110));
    const double radius = uniform_in(rng, 1.0, 60.0);

    std::vector<std::int32_t> brute;
    for (std::size_t i = 0; i < cloud.size(); ++i)
      if ((cloud[i] - center).norm() <= radius)
        brute.push_back(static_cast<std::int32_t>(i));
    CHECK(index.query_radius(center, radius) == brute);

    const Vec3 lo = center - Vec3(radius, radius / 2, radius);
    const Vec3 hi = center + Vec3(radius / 3, radius, radius);
    std::vector<std::int32_t> brute_box;
    for (std::size_t i = 0; i < cloud.size(); ++i)
      if ((cloud[i].array() >= lo.array()).all() &&
          (cloud[i].array() <= hi.array()).all())
        brute_box.push_back(static_cast<std::int32_t>(i));
    CHECK(index.query_aabb(lo, hi) == brute_box);
  }
}

TEST_CASE("cloud invariants: bounding box contains every point") {
  Rng rng = make_rng(191);
  const PointCloud cloud = random_cloud(500, rng);
  for (const Vec3& p : cloud) CHECK(cloud.bounds().contains(p));
}
