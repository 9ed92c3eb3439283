#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cylevo/evolution.hpp"
#include "cylevo/geometry.hpp"
#include "cylevo/point_cloud.hpp"

namespace cylevo {

/// Bad or unreadable input data (files, formats, schemas).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CloudFormat { Auto, XyzAscii, PlyAscii, PlyBinaryLE };

/// Reads a point cloud; Auto picks by extension (.ply / anything else is
/// xyz-ascii). Malformed input raises DataError with the offending
/// line/offset; an empty cloud is a DataError as well.
PointCloud read_cloud(const std::filesystem::path& path,
                      CloudFormat format = CloudFormat::Auto);

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                 CloudFormat format);

struct SolutionRecord {
  Cylinder cylinder;
  double potential_fitness = 0.0;
  double realized_fitness = 0.0;
  bool accepted = false;
};

/// Persisted outcome of a fit: the whole retained population (so the
/// acceptance threshold can be re-applied later without re-running), the
/// per-generation log and the configuration echo.
struct FitResult {
  static constexpr int kSchemaVersion = 1;

  double alpha = 0.5;
  EvolutionConfig config;
  std::string input_descriptor;
  std::vector<SolutionRecord> population;  // ranked, accepted and not
  std::vector<GenerationReport> generations;

  std::vector<SolutionRecord> accepted() const;
};

void write_result(const FitResult& result, const std::filesystem::path& path);
FitResult read_result(const std::filesystem::path& path);

/// Re-applies the acceptance threshold on the retained population.
/// new_alpha must be in [0, 1].
FitResult rethreshold(FitResult result, double new_alpha);

/// Writes closed triangulated cylinders as a Wavefront OBJ file;
/// 2*segments + 2 vertices and 4*segments triangles per cylinder.
void export_mesh(std::span<const Cylinder> cylinders,
                 const std::filesystem::path& path, int segments);

}  // namespace cylevo
