#pragma once

// Ablation drivers: train every (variant, model shape, training set, seed)
// combination, evaluate on every test set and reduce to the report tables.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geoconv/datasets.hpp"
#include "geoconv/layers.hpp"
#include "geoconv/train.hpp"

namespace geoconv {

using ProgressFn = std::function<void(const std::string&)>;

struct ModelShape {
  std::size_t layers = 1;
  std::size_t filters = 1;
  bool operator==(const ModelShape&) const = default;
};

/// 0.001 * 3^k for k = 0..6.
std::vector<double> default_densities();

/// File names used when datasets are read from a directory.
std::filesystem::path mass_centre_file(const std::filesystem::path& dir, double density, Split split);
std::filesystem::path greek_file(const std::filesystem::path& dir, Split split);

struct MassCentreConfig {
  std::vector<double> densities = default_densities();
  std::vector<ModelShape> shapes = {{1, 1}, {1, 2}, {2, 1}, {2, 2}};
  std::vector<Variant> variants = {Variant::kConv, Variant::kCoordConv, Variant::kGeoConv};
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::size_t n_train = 10000;
  std::size_t n_test = 2000;
  std::size_t image_size = 32;
  TrainConfig train;
  std::uint64_t data_seed = 0;
  /// When set, datasets are loaded from here instead of generated; a missing
  /// file is a ConfigError.
  std::optional<std::filesystem::path> data_dir;
  std::size_t jobs = 1;
  ProgressFn progress;
};

struct CellLoss {
  double train_density = 0.0;
  double test_density = 0.0;
  Variant variant = Variant::kConv;
  std::size_t layers = 0;
  std::size_t filters = 0;
  double loss = 0.0;
  bool operator==(const CellLoss&) const = default;
};

struct RunLoss {
  std::uint64_t seed = 0;
  CellLoss cell;
  bool operator==(const RunLoss&) const = default;
};

struct VariantAggregate {
  Variant variant = Variant::kConv;
  double avg_loss = 0.0;
  double norm_avg_loss = 0.0;
  std::size_t best_count = 0;
  bool operator==(const VariantAggregate&) const = default;
};

struct BenchReport {
  std::map<std::string, std::string> metadata;
  std::vector<RunLoss> runs;         // one row per seed
  std::vector<CellLoss> matrix;      // seed-averaged
  std::vector<CellLoss> normalized;  // matrix / per-shape total
  std::vector<VariantAggregate> aggregates;
};

/// Divides each loss by the sum of all losses of the same model shape
/// (every variant, training density and test density).
std::vector<CellLoss> normalize_losses(const std::vector<CellLoss>& matrix);

/// avg_loss: mean loss over all cells of the variant. norm_avg_loss: mean over
/// shapes of the variant's share of the shape total. best_count: number of
/// (train, test) density pairs where the variant has the lowest shape-mean
/// normalized loss (ties go to the earlier variant).
std::vector<VariantAggregate> aggregate_losses(const std::vector<CellLoss>& matrix);

BenchReport run_mass_centre_ablation(const MassCentreConfig& cfg);

struct PositionalBiasConfig {
  std::vector<std::size_t> depths = {1, 2, 3};
  std::vector<Variant> variants = {Variant::kConv, Variant::kCoordConv, Variant::kGeoConv};
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::size_t n_train = 10000;
  std::size_t image_size = 64;
  std::int64_t spread = 4;
  TrainConfig train;
  std::uint64_t data_seed = 0;
  std::optional<std::filesystem::path> data_dir;
  std::size_t jobs = 1;
  ProgressFn progress;
};

struct GreekRow {
  Variant variant = Variant::kConv;
  std::size_t layers = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  bool operator==(const GreekRow&) const = default;
};

struct GreekRun {
  std::uint64_t seed = 0;
  GreekRow row;
  bool operator==(const GreekRun&) const = default;
};

struct GreekAggregate {
  Variant variant = Variant::kConv;
  double avg_loss = 0.0;
  double avg_accuracy = 0.0;
  bool operator==(const GreekAggregate&) const = default;
};

struct GreekReport {
  std::map<std::string, std::string> metadata;
  std::vector<GreekRun> runs;
  std::vector<GreekRow> rows;  // seed-averaged, per (variant, depth)
  std::vector<GreekAggregate> aggregates;
};

/// Mean over depths of each variant's seed-averaged loss and accuracy.
std::vector<GreekAggregate> aggregate_greek(const std::vector<GreekRow>& rows);

GreekReport run_positional_bias_sweep(const PositionalBiasConfig& cfg);

/// Runs `count` independent jobs on up to `workers` threads. The first
/// exception thrown by a job is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job);

}  // namespace geoconv
