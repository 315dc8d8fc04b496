#include "geoconv/model.hpp"

#include <cmath>
#include <string>

#include "geoconv/dense.hpp"

namespace geoconv {

std::string_view to_string(Head h) { return h == Head::kCentroid ? "centroid" : "classifier"; }
std::string_view to_string(FilterSchedule s) {
  return s == FilterSchedule::kConstant ? "constant" : "doubling";
}
std::size_t head_outputs(Head h) { return h == Head::kCentroid ? 2 : 3; }

ModelSpec centroid_model_spec(Variant v, std::size_t layers, std::size_t filters, std::size_t input_size) {
  ModelSpec s;
  s.variant = v;
  s.n_layers = layers;
  s.n_filters = filters;
  s.head = Head::kCentroid;
  s.input_size = input_size;
  return s;
}

ModelSpec greek_model_spec(Variant v, std::size_t layers, std::size_t input_size) {
  ModelSpec s;
  s.variant = v;
  s.n_layers = layers;
  s.n_filters = 1;
  s.schedule = FilterSchedule::kDoubling;
  s.head = Head::kClassifier;
  s.input_size = input_size;
  return s;
}

std::vector<std::size_t> layer_filter_counts(const ModelSpec& spec) {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < spec.n_layers; ++l) {
    out.push_back(spec.schedule == FilterSchedule::kDoubling ? (std::size_t{1} << l) : spec.n_filters);
  }
  return out;
}

nlohmann::json to_json(const ModelSpec& s) {
  return {
      {"variant", to_string(s.variant)},
      {"n_layers", s.n_layers},
      {"n_filters", s.n_filters},
      {"schedule", to_string(s.schedule)},
      {"head", to_string(s.head)},
      {"input_size", s.input_size},
      {"input_channels", s.input_channels},
      {"kernel", s.kernel},
      {"stride", s.stride},
      {"padding", s.padding},
      {"activation", to_string(s.activation)},
      {"shift_policy",
       {{"mode", s.shift_policy.mode == ShiftPolicy::Mode::kFixed ? "fixed" : "resample"},
        {"low", s.shift_policy.low},
        {"high", s.shift_policy.high},
        {"fixed_value", s.shift_policy.fixed_value},
        {"eval_value", s.shift_policy.eval_value}}},
  };
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
  try {
    ModelSpec s;
    s.variant = parse_variant(j.at("variant").get<std::string>());
    s.n_layers = j.at("n_layers").get<std::size_t>();
    s.n_filters = j.at("n_filters").get<std::size_t>();
    const auto schedule = j.at("schedule").get<std::string>();
    if (schedule != "constant" && schedule != "doubling") throw ConfigError("unknown schedule " + schedule);
    s.schedule = schedule == "constant" ? FilterSchedule::kConstant : FilterSchedule::kDoubling;
    const auto head = j.at("head").get<std::string>();
    if (head != "centroid" && head != "classifier") throw ConfigError("unknown head " + head);
    s.head = head == "centroid" ? Head::kCentroid : Head::kClassifier;
    s.input_size = j.at("input_size").get<std::size_t>();
    s.input_channels = j.at("input_channels").get<std::size_t>();
    s.kernel = j.at("kernel").get<std::size_t>();
    s.stride = j.at("stride").get<std::size_t>();
    s.padding = j.at("padding").get<std::size_t>();
    s.activation = parse_activation(j.at("activation").get<std::string>());
    const auto& sp = j.at("shift_policy");
    s.shift_policy.mode = sp.at("mode").get<std::string>() == "fixed" ? ShiftPolicy::Mode::kFixed
                                                                       : ShiftPolicy::Mode::kResample;
    s.shift_policy.low = sp.at("low").get<double>();
    s.shift_policy.high = sp.at("high").get<double>();
    s.shift_policy.fixed_value = sp.at("fixed_value").get<double>();
    s.shift_policy.eval_value = sp.at("eval_value").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model spec: ") + e.what());
  }
}

std::vector<Tensor*> Model::parameters() {
  std::vector<Tensor*> out;
  for (auto& p : conv) {
    out.push_back(&p.filters);
    out.push_back(&p.bias);
  }
  out.push_back(&dense_weights);
  out.push_back(&dense_bias);
  return out;
}

std::vector<const Tensor*> Model::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& p : conv) {
    out.push_back(&p.filters);
    out.push_back(&p.bias);
  }
  out.push_back(&dense_weights);
  out.push_back(&dense_bias);
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : parameters()) n += t->size();
  return n;
}

std::uint64_t Model::flops() const {
  std::uint64_t f = 2 * std::uint64_t(dense_weights.size());
  for (const auto& c : costs) f += c.flops;
  return f;
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.n_layers == 0 || spec.n_filters == 0) throw ConfigError("model needs >= 1 layer and filter");
  if (spec.input_size == 0 || spec.input_channels == 0) throw ConfigError("model input must be non-empty");
  validate(spec.shift_policy);
  Model m;
  m.spec = spec;
  Rng rng = make_rng(seed, 0x1417);
  std::size_t extent = spec.input_size;
  std::size_t channels = spec.input_channels;
  const auto filters = layer_filter_counts(spec);
  for (std::size_t l = 0; l < spec.n_layers; ++l) {
    LayerSpec ls;
    ls.variant = spec.variant;
    ls.geom = {spec.kernel, spec.kernel, spec.stride, spec.padding, channels, filters[l]};
    ls.activation = spec.activation;
    ls.shift_policy = spec.shift_policy;
    if (extent + 2 * spec.padding < spec.kernel) {
      throw ConfigError("layer " + std::to_string(l + 1) + " receives a " + std::to_string(extent) +
                        "x" + std::to_string(extent) + " map, smaller than the " +
                        std::to_string(spec.kernel) + "x" + std::to_string(spec.kernel) + " kernel");
    }
    m.costs.push_back(count_flops(ls, extent, extent));
    extent = m.costs.back().h_out;
    channels = filters[l];
    m.conv.push_back(init_layer_params(ls, rng));
    m.layers.push_back(ls);
  }
  const std::size_t features = extent * extent * channels;
  const std::size_t outputs = head_outputs(spec.head);
  m.dense_weights = Tensor({outputs, features});
  m.dense_bias = Tensor({outputs});
  const double bound = std::sqrt(6.0 / double(features));
  for (auto& w : m.dense_weights.data()) w = static_cast<float>(uniform(rng, -bound, bound));
  return m;
}

ForwardTrace model_forward(const Model& model, const Tensor& image, Rng& rng, Phase phase) {
  ForwardTrace t;
  t.caches.reserve(model.layers.size());
  t.activations.reserve(model.layers.size());
  const Tensor* x = &image;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    LayerOutput out = layer_forward(model.layers[l], *x, model.conv[l], rng, phase);
    t.caches.push_back(std::move(out.cache));
    t.activations.push_back(std::move(out.output));
    x = &t.activations.back();
  }
  t.output = dense_forward(*x, model.dense_weights, model.dense_bias);
  return t;
}

std::vector<Tensor> model_backward(const Model& model, const ForwardTrace& trace,
                                   const Tensor& grad_output) {
  const std::size_t n = model.layers.size();
  std::vector<Tensor> grads(2 * n + 2);
  DenseGrads dg = dense_backward(trace.activations.back(), model.dense_weights, grad_output);
  grads[2 * n] = std::move(dg.weights);
  grads[2 * n + 1] = std::move(dg.bias);
  Tensor upstream = std::move(dg.input);
  for (std::size_t l = n; l-- > 0;) {
    LayerGrads lg = layer_backward(model.layers[l], trace.caches[l], model.conv[l], upstream,
                                   l == 0 ? InputGrad::kSkip : InputGrad::kCompute);
    grads[2 * l] = std::move(lg.filters);
    grads[2 * l + 1] = std::move(lg.bias);
    if (lg.input) upstream = std::move(*lg.input);
  }
  return grads;
}

}  // namespace geoconv
