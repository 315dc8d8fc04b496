#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "geoconv/datasets.hpp"
#include "geoconv/loss.hpp"
#include "geoconv/model.hpp"
#include "geoconv/optimizer.hpp"

namespace geoconv {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

struct TrainHistory {
  std::vector<double> epoch_loss;  // mean per-sample training loss
};

/// Throws ConfigError if the dataset task or image size does not fit the model.
void check_compatible(const Model& model, const Dataset& ds);

/// Euclidean loss for centroid heads, cross-entropy for classifiers.
LossResult sample_loss(const Model& model, const Tensor& output, const Dataset& ds, std::size_t i);

/// Minibatch training. Deterministic for a given seed: sample order and GeoPos
/// shifts come from streams derived from cfg.seed. Throws NumericError with
/// epoch, batch and learning rate when the loss or a gradient stops being finite.
TrainHistory train(Model& model, const Dataset& ds, const TrainConfig& cfg);

struct EvalResult {
  double mean_loss = 0.0;
  std::optional<double> accuracy;  // classifier heads only
  std::size_t samples = 0;
};

/// Uses the eval-phase shift of every GeoConv layer.
EvalResult evaluate(const Model& model, const Dataset& ds);

}  // namespace geoconv
