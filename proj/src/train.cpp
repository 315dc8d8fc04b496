#include "geoconv/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

namespace geoconv {

void validate(const TrainConfig& cfg) {
  if (cfg.epochs == 0) throw ConfigError("epochs must be >= 1");
  if (cfg.batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (!(cfg.optimizer.learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
}

void check_compatible(const Model& model, const Dataset& ds) {
  const Task expected = model.spec.head == Head::kCentroid ? Task::kMassCentre : Task::kGreek;
  if (ds.meta.task != expected) {
    throw ConfigError("a " + std::string(to_string(model.spec.head)) + " model cannot use a " +
                      std::string(to_string(ds.meta.task)) + " dataset");
  }
  if (ds.height != model.spec.input_size || ds.width != model.spec.input_size ||
      ds.channels != model.spec.input_channels) {
    throw ConfigError("dataset images are " + std::to_string(ds.height) + "x" + std::to_string(ds.width) +
                      "x" + std::to_string(ds.channels) + " but the model expects " +
                      std::to_string(model.spec.input_size) + "x" + std::to_string(model.spec.input_size) +
                      "x" + std::to_string(model.spec.input_channels));
  }
}

LossResult sample_loss(const Model& model, const Tensor& output, const Dataset& ds, std::size_t i) {
  if (model.spec.head == Head::kCentroid) return euclidean_loss(output, ds.label_tensor(i));
  const float label = ds.label(i)[0];
  return cross_entropy(output, static_cast<std::size_t>(label));
}

namespace {

[[noreturn]] void abort_training(const std::string& what, std::size_t epoch, std::size_t batch,
                                 const TrainConfig& cfg) {
  std::ostringstream os;
  os << what << " at epoch " << epoch + 1 << ", batch " << batch + 1
     << " (lr=" << cfg.optimizer.learning_rate << ")";
  throw NumericError(os.str());
}

}  // namespace

TrainHistory train(Model& model, const Dataset& ds, const TrainConfig& cfg) {
  validate(cfg);
  check_compatible(model, ds);
  TrainHistory history;
  if (ds.n == 0) return history;

  std::vector<std::size_t> order(ds.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng order_rng = make_rng(cfg.seed, 0x5EED);
  Rng shift_rng = make_rng(cfg.seed, 0x5F1F);
  OptimizerState state;
  const std::vector<Tensor*> params = model.parameters();

  std::vector<Tensor> batch_grads;
  for (const Tensor* p : params) batch_grads.emplace_back(p->shape());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), order_rng);
    double epoch_loss = 0.0;
    const std::size_t n_batches = (ds.n + cfg.batch_size - 1) / cfg.batch_size;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t begin = b * cfg.batch_size;
      const std::size_t end = std::min(ds.n, begin + cfg.batch_size);
      for (auto& g : batch_grads) g.fill(0.0f);
      double batch_loss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = order[k];
        const ForwardTrace trace = model_forward(model, ds.image_tensor(i), shift_rng, Phase::kTrain);
        const LossResult loss = sample_loss(model, trace.output, ds, i);
        if (!std::isfinite(loss.value)) abort_training("non-finite loss", epoch, b, cfg);
        batch_loss += loss.value;
        const std::vector<Tensor> grads = model_backward(model, trace, loss.grad);
        for (std::size_t p = 0; p < grads.size(); ++p) batch_grads[p] += grads[p];
      }
      const float scale = 1.0f / static_cast<float>(end - begin);
      for (auto& g : batch_grads) g *= scale;
      try {
        optimizer_step(params, batch_grads, state, cfg.optimizer);
      } catch (const NumericError& e) {
        abort_training(e.what(), epoch, b, cfg);
      }
      epoch_loss += batch_loss;
    }
    history.epoch_loss.push_back(epoch_loss / double(ds.n));
  }
  return history;
}

EvalResult evaluate(const Model& model, const Dataset& ds) {
  check_compatible(model, ds);
  EvalResult r;
  r.samples = ds.n;
  if (model.spec.head == Head::kClassifier) r.accuracy = 0.0;
  if (ds.n == 0) return r;
  Rng unused = make_rng(0, 0);
  double total = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.n; ++i) {
    const ForwardTrace trace = model_forward(model, ds.image_tensor(i), unused, Phase::kEval);
    total += sample_loss(model, trace.output, ds, i).value;
    if (r.accuracy) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < trace.output.size(); ++k) {
        if (trace.output[k] > trace.output[best]) best = k;
      }
      if (best == static_cast<std::size_t>(ds.label(i)[0])) ++correct;
    }
  }
  r.mean_loss = total / double(ds.n);
  if (r.accuracy) r.accuracy = double(correct) / double(ds.n);
  return r;
}

}  // namespace geoconv
