#include "cylevo/io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace cylevo {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line,
                       const std::string& what) {
  throw DataError(path.string() + ":" + std::to_string(line) + ": " + what);
}

PointCloud read_xyz(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Vec3> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z))
      fail(path, line_no, "expected three coordinates");
    std::string rest;
    if (ls >> rest) fail(path, line_no, "trailing token '" + rest + "'");
    pts.emplace_back(x, y, z);
  }
  if (pts.empty()) throw DataError(path.string() + ": empty cloud");
  return PointCloud(std::move(pts));
}

struct PlyProperty {
  std::string type;
  std::string name;
  bool is_list = false;
  std::string count_type;
};

std::size_t ply_scalar_size(const std::string& type,
                            const std::filesystem::path& path,
                            std::size_t line_no) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8")
    return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16")
    return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
      type == "float" || type == "float32")
    return 4;
  if (type == "double" || type == "float64" || type == "int64" || type == "uint64")
    return 8;
  fail(path, line_no, "unknown PLY type '" + type + "'");
}

PointCloud read_ply(const std::filesystem::path& path, CloudFormat requested) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) fail(path, line_no, "unexpected end of header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };

  if (next_line() != "ply") fail(path, line_no, "missing 'ply' magic");

  bool binary = false;
  bool format_seen = false;
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> props;
  };
  std::vector<Element> elements;

  while (true) {
    std::istringstream ls(next_line());
    std::string word;
    ls >> word;
    if (word == "comment" || word == "obj_info" || word.empty()) continue;
    if (word == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii")
        binary = false;
      else if (fmt == "binary_little_endian")
        binary = true;
      else
        fail(path, line_no, "unsupported PLY format '" + fmt + "'");
      format_seen = true;
      continue;
    }
    if (word == "element") {
      Element e;
      if (!(ls >> e.name >> e.count))
        fail(path, line_no, "malformed element declaration");
      elements.push_back(std::move(e));
      continue;
    }
    if (word == "property") {
      if (elements.empty()) fail(path, line_no, "property before any element");
      PlyProperty p;
      std::string t;
      ls >> t;
      if (t == "list") {
        p.is_list = true;
        if (!(ls >> p.count_type >> p.type >> p.name))
          fail(path, line_no, "malformed list property");
      } else {
        p.type = t;
        if (!(ls >> p.name)) fail(path, line_no, "malformed property");
      }
      elements.back().props.push_back(std::move(p));
      continue;
    }
    if (word == "end_header") break;
    fail(path, line_no, "unknown header keyword '" + word + "'");
  }
  if (!format_seen) fail(path, line_no, "missing format declaration");
  if (requested == CloudFormat::PlyAscii && binary)
    throw DataError(path.string() + ": expected ascii PLY, found binary");
  if (requested == CloudFormat::PlyBinaryLE && !binary)
    throw DataError(path.string() + ": expected binary PLY, found ascii");

  const auto vertex_it =
      std::find_if(elements.begin(), elements.end(),
                   [](const Element& e) { return e.name == "vertex"; });
  if (vertex_it == elements.end())
    fail(path, line_no, "no vertex element in header");
  int ix = -1, iy = -1, iz = -1;
  for (std::size_t k = 0; k < vertex_it->props.size(); ++k) {
    const PlyProperty& p = vertex_it->props[k];
    if (p.is_list) fail(path, line_no, "list property on vertex element");
    if (p.name == "x") ix = static_cast<int>(k);
    if (p.name == "y") iy = static_cast<int>(k);
    if (p.name == "z") iz = static_cast<int>(k);
  }
  if (ix < 0 || iy < 0 || iz < 0)
    fail(path, line_no, "vertex element lacks x/y/z properties");

  std::vector<Vec3> pts;
  pts.reserve(vertex_it->count);

  auto read_binary_scalar = [&](const std::string& type) -> double {
    unsigned char buf[8];
    const std::size_t size = ply_scalar_size(type, path, line_no);
    if (!in.read(reinterpret_cast<char*>(buf), std::streamsize(size)))
      throw DataError(path.string() + ": truncated binary payload after " +
                      std::to_string(pts.size()) + " of " +
                      std::to_string(vertex_it->count) + " vertices");
    if (type == "float" || type == "float32") {
      float f;
      std::memcpy(&f, buf, 4);
      return static_cast<double>(f);
    }
    if (type == "double" || type == "float64") {
      double d;
      std::memcpy(&d, buf, 8);
      return d;
    }
    // integral types widened; little-endian host assumed for the mirror types
    std::int64_t v = 0;
    const bool is_signed = type[0] == 'c' || type[0] == 's' || type[0] == 'i';
    std::memcpy(&v, buf, size);
    if (is_signed && size < 8) {
      const std::int64_t shift = std::int64_t(64 - 8 * size);
      v = (v << shift) >> shift;
    }
    return static_cast<double>(v);
  };

  for (const Element& e : elements) {
    const bool is_vertex = &e == &*vertex_it;
    for (std::size_t rec = 0; rec < e.count; ++rec) {
      double x = 0, y = 0, z = 0;
      if (!binary) {
        std::string record_line;
        if (!std::getline(in, record_line)) {
          if (is_vertex)
            throw DataError(path.string() + ": vertex element declares " +
                            std::to_string(e.count) + " records but only " +
                            std::to_string(rec) + " present");
          throw DataError(path.string() + ": element '" + e.name +
                          "' declares " + std::to_string(e.count) +
                          " records but only " + std::to_string(rec) +
                          " present");
        }
        ++line_no;
        std::istringstream ls(record_line);
        for (std::size_t k = 0; k < e.props.size(); ++k) {
          const PlyProperty& p = e.props[k];
          if (p.is_list) {
            std::size_t n;
            if (!(ls >> n)) fail(path, line_no, "malformed list count");
            double dump;
            for (std::size_t q = 0; q < n; ++q)
              if (!(ls >> dump)) fail(path, line_no, "truncated list record");
            continue;
          }
          double v;
          if (!(ls >> v)) fail(path, line_no, "truncated vertex record");
          if (is_vertex) {
            if (static_cast<int>(k) == ix) x = v;
            if (static_cast<int>(k) == iy) y = v;
            if (static_cast<int>(k) == iz) z = v;
          }
        }
      } else {
        for (std::size_t k = 0; k < e.props.size(); ++k) {
          const PlyProperty& p = e.props[k];
          if (p.is_list) {
            const double n = read_binary_scalar(p.count_type);
            for (std::size_t q = 0; q < static_cast<std::size_t>(n); ++q)
              (void)read_binary_scalar(p.type);
            continue;
          }
          const double v = read_binary_scalar(p.type);
          if (is_vertex) {
            if (static_cast<int>(k) == ix) x = v;
            if (static_cast<int>(k) == iy) y = v;
            if (static_cast<int>(k) == iz) z = v;
          }
        }
      }
      if (is_vertex) pts.emplace_back(x, y, z);
    }
  }
  if (pts.empty()) throw DataError(path.string() + ": empty cloud");
  return PointCloud(std::move(pts));
}

}  // namespace

PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format) {
  if (format == CloudFormat::Auto && path.extension() != ".ply")
    return read_xyz(path);
  switch (format) {
    case CloudFormat::XyzAscii:
      return read_xyz(path);
    case CloudFormat::Auto:  // .ply; the header states which flavor it is
    case CloudFormat::PlyAscii:
    case CloudFormat::PlyBinaryLE:
      return read_ply(path, format);
    default:
      throw DataError("unsupported cloud format");
  }
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                 CloudFormat format) {
  if (format == CloudFormat::Auto)
    format = path.extension() == ".ply" ? CloudFormat::PlyBinaryLE
                                        : CloudFormat::XyzAscii;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  if (format == CloudFormat::XyzAscii) {
    out.precision(17);
    for (const Vec3& p : cloud)
      out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    return;
  }
  out << "ply\nformat "
      << (format == CloudFormat::PlyBinaryLE ? "binary_little_endian" : "ascii")
      << " 1.0\nelement vertex " << cloud.size()
      << "\nproperty double x\nproperty double y\nproperty double z\n"
      << "end_header\n";
  if (format == CloudFormat::PlyBinaryLE) {
    for (const Vec3& p : cloud) {
      const double xyz[3] = {p.x(), p.y(), p.z()};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    }
  } else {
    out.precision(17);
    for (const Vec3& p : cloud)
      out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
}

namespace {

json to_json(const Cylinder& c) {
  return json{{"x", c.x},         {"y", c.y},   {"z", c.z}, {"theta", c.theta},
              {"phi", c.phi},     {"l", c.l},   {"r", c.r}};
}

Cylinder cylinder_from_json(const json& j) {
  return Cylinder{j.at("x"),     j.at("y"), j.at("z"), j.at("theta"),
                  j.at("phi"),   j.at("l"), j.at("r")};
}

json to_json(const EvolutionConfig& cfg) {
  json j{{"alpha", cfg.alpha},
         {"k", cfg.k},
         {"p_min", cfg.p_min},
         {"tau", cfg.tau},
         {"max_generations", cfg.max_generations},
         {"rng_seed", cfg.rng_seed},
         {"eta_m", cfg.eta_m},
         {"eta_c", cfg.eta_c},
         {"crossover_rate", cfg.crossover_rate},
         {"radial_tolerance_factor", cfg.radial_tolerance_factor},
         {"threads", cfg.threads}};
  json ops = json::array();
  for (int i = 0; i < kOperatorCount; ++i)
    if (cfg.operator_set.contains(static_cast<OperatorId>(i)))
      ops.push_back(operator_name(static_cast<OperatorId>(i)));
  j["operators"] = std::move(ops);
  if (cfg.bounds) {
    const ParameterBounds& b = *cfg.bounds;
    j["bounds"] = json{{"box_lo", {b.box_lo.x(), b.box_lo.y(), b.box_lo.z()}},
                       {"box_hi", {b.box_hi.x(), b.box_hi.y(), b.box_hi.z()}},
                       {"l_min", b.l_min},
                       {"l_max", b.l_max},
                       {"r_min", b.r_min},
                       {"r_max", b.r_max}};
  }
  return j;
}

EvolutionConfig config_from_json(const json& j) {
  EvolutionConfig cfg;
  cfg.alpha = j.at("alpha");
  cfg.k = j.at("k");
  cfg.p_min = j.at("p_min");
  cfg.tau = j.at("tau");
  cfg.max_generations = j.at("max_generations");
  cfg.rng_seed = j.at("rng_seed");
  cfg.eta_m = j.at("eta_m");
  cfg.eta_c = j.at("eta_c");
  cfg.crossover_rate = j.at("crossover_rate");
  cfg.radial_tolerance_factor = j.at("radial_tolerance_factor");
  cfg.threads = j.at("threads");
  cfg.operator_set = OperatorSet{};
  for (const auto& name : j.at("operators")) {
    const auto id = operator_from_name(name.get<std::string>());
    if (!id) throw DataError("unknown operator name in result file");
    cfg.operator_set.insert(*id);
  }
  if (j.contains("bounds")) {
    const json& b = j.at("bounds");
    ParameterBounds pb;
    pb.box_lo = Vec3(b.at("box_lo")[0], b.at("box_lo")[1], b.at("box_lo")[2]);
    pb.box_hi = Vec3(b.at("box_hi")[0], b.at("box_hi")[1], b.at("box_hi")[2]);
    pb.l_min = b.at("l_min");
    pb.l_max = b.at("l_max");
    pb.r_min = b.at("r_min");
    pb.r_max = b.at("r_max");
    cfg.bounds = pb;
  }
  return cfg;
}

}  // namespace

std::vector<SolutionRecord> FitResult::accepted() const {
  std::vector<SolutionRecord> out;
  for (const SolutionRecord& s : population)
    if (s.accepted) out.push_back(s);
  return out;
}

void write_result(const FitResult& result, const std::filesystem::path& path) {
  json j;
  j["schema_version"] = FitResult::kSchemaVersion;
  j["alpha"] = result.alpha;
  j["config"] = to_json(result.config);
  j["input"] = result.input_descriptor;
  json pop = json::array();
  for (const SolutionRecord& s : result.population) {
    pop.push_back(json{{"cylinder", to_json(s.cylinder)},
                       {"potential_fitness", s.potential_fitness},
                       {"realized_fitness", s.realized_fitness},
                       {"accepted", s.accepted}});
  }
  j["population"] = std::move(pop);
  json gens = json::array();
  for (const GenerationReport& g : result.generations) {
    json ops = json::array();
    for (std::uint32_t c : g.operator_applications) ops.push_back(c);
    gens.push_back(json{{"generation", g.generation},
                        {"population_size", g.population_size},
                        {"best_realized", g.best_realized},
                        {"accepted_count", g.accepted_count},
                        {"operator_applications", std::move(ops)}});
  }
  j["generations"] = std::move(gens);

  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

FitResult read_result(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (!j.contains("schema_version"))
    throw DataError(path.string() + ": missing schema_version");
  const int version = j.at("schema_version");
  if (version != FitResult::kSchemaVersion)
    throw DataError(path.string() + ": schema version " +
                    std::to_string(version) + " not supported (expected " +
                    std::to_string(FitResult::kSchemaVersion) + ")");
  try {
    FitResult result;
    result.alpha = j.at("alpha");
    result.config = config_from_json(j.at("config"));
    result.input_descriptor = j.at("input");
    for (const json& s : j.at("population")) {
      SolutionRecord rec;
      rec.cylinder = cylinder_from_json(s.at("cylinder"));
      rec.potential_fitness = s.at("potential_fitness");
      rec.realized_fitness = s.at("realized_fitness");
      rec.accepted = s.at("accepted");
      result.population.push_back(rec);
    }
    for (const json& g : j.at("generations")) {
      GenerationReport rep;
      rep.generation = g.at("generation");
      rep.population_size = g.at("population_size");
      rep.best_realized = g.at("best_realized");
      rep.accepted_count = g.at("accepted_count");
      const json& ops = g.at("operator_applications");
      for (std::size_t i = 0; i < rep.operator_applications.size() &&
                              i < ops.size();
           ++i)
        rep.operator_applications[i] = ops[i];
      result.generations.push_back(rep);
    }
    return result;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

FitResult rethreshold(FitResult result, double new_alpha) {
  if (!(new_alpha >= 0.0 && new_alpha <= 1.0))
    throw std::invalid_argument("rethreshold: alpha must be in [0, 1]");
  result.alpha = new_alpha;
  for (SolutionRecord& s : result.population)
    s.accepted = s.realized_fitness >= new_alpha;
  return result;
}

void export_mesh(std::span<const Cylinder> cylinders,
                 const std::filesystem::path& path, int segments) {
  if (segments < 3)
    throw std::invalid_argument("export_mesh: segments must be >= 3");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "# " << cylinders.size() << " cylinders, " << segments
      << " segments each\n";

  std::size_t base = 1;  // OBJ indices are one-based
  for (const Cylinder& c : cylinders) {
    const CylinderFrame f = CylinderFrame::of(c);
    const Vec3 cap0 = f.origin - (c.l / 2.0) * f.axis;
    const Vec3 cap1 = f.origin + (c.l / 2.0) * f.axis;
    for (int s = 0; s < segments; ++s) {
      const double ang = kTwoPi * double(s) / double(segments);
      const Vec3 rim = c.r * (std::cos(ang) * f.u + std::sin(ang) * f.v);
      const Vec3 v0 = cap0 + rim;
      const Vec3 v1 = cap1 + rim;
      out << "v " << v0.x() << ' ' << v0.y() << ' ' << v0.z() << '\n';
      out << "v " << v1.x() << ' ' << v1.y() << ' ' << v1.z() << '\n';
    }
    out << "v " << cap0.x() << ' ' << cap0.y() << ' ' << cap0.z() << '\n';
    out << "v " << cap1.x() << ' ' << cap1.y() << ' ' << cap1.z() << '\n';

    const std::size_t center0 = base + 2 * std::size_t(segments);
    const std::size_t center1 = center0 + 1;
    for (int s = 0; s < segments; ++s) {
      const std::size_t s2 = std::size_t((s + 1) % segments);
      const std::size_t a0 = base + 2 * std::size_t(s);
      const std::size_t a1 = a0 + 1;
      const std::size_t b0 = base + 2 * s2;
      const std::size_t b1 = b0 + 1;
      // lateral quad, outward orientation
      out << "f " << a0 << ' ' << b0 << ' ' << b1 << '\n';
      out << "f " << a0 << ' ' << b1 << ' ' << a1 << '\n';
      // caps
      out << "f " << center0 << ' ' << b0 << ' ' << a0 << '\n';
      out << "f " << center1 << ' ' << a1 << ' ' << b1 << '\n';
    }
    base += 2 * std::size_t(segments) + 2;
  }
}

}  // namespace cylevo
