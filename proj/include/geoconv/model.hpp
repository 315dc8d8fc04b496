#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <json.hpp>
#include "geoconv/layers.hpp"

namespace geoconv {

enum class Head { kCentroid, kClassifier };
enum class FilterSchedule { kConstant, kDoubling };

std::string_view to_string(Head h);
std::string_view to_string(FilterSchedule s);
std::size_t head_outputs(Head h);

/// A stack of n_layers convolutions (all of one variant) followed by a dense
/// head. With the doubling schedule layer l (1-based) has 2^(l-1) filters;
/// otherwise every layer has n_filters.
struct ModelSpec {
  Variant variant = Variant::kConv;
  std::size_t n_layers = 1;
  std::size_t n_filters = 1;
  FilterSchedule schedule = FilterSchedule::kConstant;
  Head head = Head::kCentroid;
  std::size_t input_size = 32;
  std::size_t input_channels = 1;
  std::size_t kernel = 3;
  std::size_t stride = 2;
  std::size_t padding = 0;
  Activation activation = Activation::kRelu;
  ShiftPolicy shift_policy;

  bool operator==(const ModelSpec&) const = default;
};

/// Centre-of-mass ablation model "i x j": i layers of j filters, 2-output head.
ModelSpec centroid_model_spec(Variant v, std::size_t layers, std::size_t filters,
                              std::size_t input_size = 32);
/// Positional-bias model: `layers` layers with doubling filters, 3-class head.
ModelSpec greek_model_spec(Variant v, std::size_t layers, std::size_t input_size = 64);

std::vector<std::size_t> layer_filter_counts(const ModelSpec& spec);

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

struct Model {
  ModelSpec spec;
  std::vector<LayerSpec> layers;
  std::vector<LayerParams> conv;
  Tensor dense_weights;  // [outputs, features]
  Tensor dense_bias;     // [outputs]
  std::vector<FlopReport> costs;  // per conv layer

  /// Layer order: conv0 filters, conv0 bias, ..., dense weights, dense bias.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::size_t parameter_count() const;
  std::uint64_t flops() const;
};

/// Throws ConfigError when a feature map would shrink below 1x1.
Model build_model(const ModelSpec& spec, std::uint64_t seed);

struct ForwardTrace {
  std::vector<LayerCache> caches;
  std::vector<Tensor> activations;  // output of every conv layer
  Tensor output;
};

ForwardTrace model_forward(const Model& model, const Tensor& image, Rng& rng,
                           Phase phase = Phase::kTrain);

/// Gradients in the order of Model::parameters().
std::vector<Tensor> model_backward(const Model& model, const ForwardTrace& trace,
                                   const Tensor& grad_output);

}  // namespace geoconv
