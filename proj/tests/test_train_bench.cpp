#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>

#include "geoconv/checkpoint.hpp"
#include "geoconv/report.hpp"
#include "support/reference.hpp"

using namespace geoconv;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("geoconv_tb_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Tiny ablation that exercises every code path in a few seconds.
MassCentreConfig tiny_ablation() {
  MassCentreConfig cfg;
  cfg.densities = {0.01, 0.1};
  cfg.shapes = {{1, 1}, {1, 2}};
  cfg.seeds = {0, 1};
  cfg.n_train = 64;
  cfg.n_test = 32;
  cfg.image_size = 12;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 16;
  return cfg;
}

}  // namespace

TEST_CASE("model construction") {
  const Model m = build_model(centroid_model_spec(Variant::kConv, 1, 1), 0);
  REQUIRE(m.layers.size() == 1);
  CHECK(m.layers[0].geom.kernel_h == 3);
  CHECK(m.layers[0].geom.stride == 2);
  CHECK(m.layers[0].geom.out_channels == 1);
  CHECK(m.dense_weights.shape() == Shape{2, 15 * 15});
  CHECK(m.dense_bias.shape() == Shape{2});

  const Model g = build_model(centroid_model_spec(Variant::kGeoConv, 1, 1), 0);
  CHECK(g.parameter_count() - m.parameter_count() == 9);

  for (std::size_t l : {1, 2})
    for (std::size_t f : {1, 2}) {
      const auto conv = build_model(centroid_model_spec(Variant::kConv, l, f), 0).parameter_count();
      const auto geo = build_model(centroid_model_spec(Variant::kGeoConv, l, f), 0).parameter_count();
      const auto coord = build_model(centroid_model_spec(Variant::kCoordConv, l, f), 0).parameter_count();
      CHECK(geo == conv + l * 9 * f);
      CHECK(coord == conv + 2 * l * 9 * f);
    }

  CHECK(layer_filter_counts(greek_model_spec(Variant::kConv, 5)) == std::vector<std::size_t>{1, 2, 4, 8, 16});
  CHECK(build_model(greek_model_spec(Variant::kCoordConv, 5), 0).dense_weights.dim(0) == 3);
  CHECK_THROWS_AS(build_model(centroid_model_spec(Variant::kConv, 5, 1), 0), ConfigError);
}

TEST_CASE("model spec JSON round trip") {
  ModelSpec s = greek_model_spec(Variant::kGeoConv, 3);
  s.shift_policy = ShiftPolicy::uniform(-2, 3);
  CHECK(model_spec_from_json(to_json(s)) == s);
}

TEST_CASE("model gradients match finite differences") {
  for (auto v : {Variant::kConv, Variant::kCoordConv, Variant::kGeoConv}) {
    ModelSpec spec = centroid_model_spec(v, 2, 2, 11);
    spec.activation = Activation::kSigmoid;
    spec.shift_policy = ShiftPolicy::fixed(0.3);
    Model m = build_model(spec, 4);
    const Tensor x = ref::random_tensor({11, 11, 1}, 5);
    const Tensor target = Tensor::from_values({2}, {4.0f, 7.0f});
    Rng rng(0);
    const auto trace = model_forward(m, x, rng);
    const auto grads = model_backward(m, trace, euclidean_loss(trace.output, target).grad);
    const auto params = m.parameters();
    REQUIRE(grads.size() == params.size());
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
      for (std::size_t i = 0; i < params[p]->size(); ++i) {
        float& w = (*params[p])[i];
        const float keep = w;
        auto loss_at = [&](float value) {
          w = value;
          Rng r(0);
          return euclidean_loss(model_forward(m, x, r).output, target).value;
        };
        const double h = 1e-2;
        const double numeric = (loss_at(keep + float(h)) - loss_at(keep - float(h))) / (2 * h);
        w = keep;
        const double analytic = grads[p][i];
        worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-2}));
      }
    }
    CAPTURE(to_string(v));
    CHECK(worst < 1e-2);  // float32 forward pass; exact checks live in the layer tests
  }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const Dataset ds = gen_mass_centre(40, 16, 0.1, 1);
  Model m = build_model(centroid_model_spec(Variant::kGeoConv, 1, 2, 16), 3);
  const Model before = m;
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.optimizer.learning_rate = 0.0;
  train(m, ds, cfg);
  const auto a = m.parameters();
  const auto b = before.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
}

TEST_CASE("training loss decreases and is reproducible") {
  const Dataset ds = gen_mass_centre(2000, 32, 0.001, 0);  // mostly single white pixels
  TrainConfig cfg;
  cfg.epochs = 5;
  Model a = build_model(centroid_model_spec(Variant::kConv, 1, 1), 7);
  Model b = a;
  const auto ha = train(a, ds, cfg);
  const auto hb = train(b, ds, cfg);
  REQUIRE(ha.epoch_loss.size() == 5);
  for (std::size_t e = 1; e < 5; ++e) CHECK(ha.epoch_loss[e] < ha.epoch_loss[e - 1]);
  CHECK(ha.epoch_loss == hb.epoch_loss);
  CHECK(a.parameters().size() == b.parameters().size());
  for (std::size_t i = 0; i < a.parameters().size(); ++i) CHECK(*a.parameters()[i] == *b.parameters()[i]);
}

TEST_CASE("task mismatch is rejected") {
  Model m = build_model(greek_model_spec(Variant::kConv, 1), 0);
  CHECK_THROWS_AS(train(m, gen_mass_centre(4, 64, 0.1, 0), TrainConfig{}), ConfigError);
  CHECK_THROWS_AS(evaluate(build_model(centroid_model_spec(Variant::kConv, 1, 1), 0), gen_mass_centre(4, 16, 0.1, 0)),
                  ConfigError);
}

TEST_CASE("evaluation baselines") {
  const Dataset ds = gen_mass_centre(300, 32, 0.05, 2);
  Model m = build_model(centroid_model_spec(Variant::kConv, 1, 1), 0);
  m.dense_weights.fill(0.0f);
  m.dense_bias = Tensor::from_values({2}, {15.5f, 15.5f});
  double expected = 0.0;
  for (std::size_t i = 0; i < ds.n; ++i)
    expected += std::hypot(15.5 - ds.label(i)[0], 15.5 - ds.label(i)[1]);
  expected /= double(ds.n);
  const auto r = evaluate(m, ds);
  CHECK(r.mean_loss == doctest::Approx(expected).epsilon(1e-9));
  CHECK_FALSE(r.accuracy.has_value());

  // Label-perfect predictor: single-pixel images read out through an exact head.
  Dataset one = ds;
  one.n = 1;
  one.images.assign(ds.images.begin(), ds.images.begin() + 1024);
  one.labels.assign(ds.labels.begin(), ds.labels.begin() + 2);
  m.dense_bias = Tensor::from_values({2}, {one.labels[0], one.labels[1]});
  CHECK(evaluate(m, one).mean_loss == 0.0);

  Model c = build_model(greek_model_spec(Variant::kGeoConv, 2), 0);
  c.dense_weights.fill(0.0f);
  const Dataset test = gen_greek_numerals(0, 64, Split::kTest, 0, 0);
  const auto acc = evaluate(c, test);
  CHECK(*acc.accuracy == doctest::Approx(1.0 / 3.0));
  CHECK(acc.mean_loss == doctest::Approx(std::log(3.0)));
}

TEST_CASE("normalization and aggregation") {
  std::vector<CellLoss> m;
  Rng rng(3);
  for (double tr : {0.1, 0.2})
    for (double te : {0.1, 0.2})
      for (auto v : {Variant::kConv, Variant::kCoordConv, Variant::kGeoConv})
        for (std::size_t f : {1, 2}) m.push_back({tr, te, v, 1, f, 1.0 + uniform01(rng)});
  const auto n = normalize_losses(m);
  for (std::size_t f : {1, 2}) {
    double s = 0;
    for (const auto& c : n)
      if (c.filters == f) s += c.loss;
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
  const auto agg = aggregate_losses(m);
  REQUIRE(agg.size() == 3);
  double share = 0;
  std::size_t best = 0;
  for (const auto& a : agg) share += a.norm_avg_loss, best += a.best_count;
  CHECK(share == doctest::Approx(1.0));
  CHECK(best == 4);

  // Brute-force oracle for one variant.
  double conv_loss = 0, conv_share = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i].variant == Variant::kConv) conv_loss += m[i].loss, conv_share += n[i].loss;
  CHECK(agg[0].avg_loss == doctest::Approx(conv_loss / 8));
  CHECK(agg[0].norm_avg_loss == doctest::Approx(conv_share / 2));
}

TEST_CASE("empty report writes header-only CSVs") {
  const auto dir = scratch("empty");
  emit_report(BenchReport{}, dir);
  CHECK(slurp(dir / "matrix.csv") == "train_density,test_density,variant,layers,filters,loss\n");
  CHECK(slurp(dir / "aggregates.csv") == "variant,avg_loss,norm_avg_loss,best_count\n");
  const auto back = read_report(dir);
  CHECK(back.matrix.empty());
  CHECK(back.aggregates.empty());
  emit_greek_report(GreekReport{}, dir);
  CHECK(slurp(dir / "greek.csv") == "variant,layers,loss,accuracy\n");
  std::filesystem::remove_all(dir);
}

TEST_CASE("mass-centre ablation end to end") {
  auto cfg = tiny_ablation();
  const BenchReport rep = run_mass_centre_ablation(cfg);
  CHECK(rep.matrix.size() == 2 * 2 * 3 * 2);
  CHECK(rep.runs.size() == rep.matrix.size() * 2);
  CHECK(rep.aggregates.size() == 3);
  for (const auto& c : rep.matrix) CHECK((std::isfinite(c.loss) && c.loss > 0));

  SUBCASE("seed averaging") {
    for (const auto& c : rep.matrix) {
      double s = 0;
      for (const auto& r : rep.runs) {
        const CellLoss& x = r.cell;
        if (x.train_density == c.train_density && x.test_density == c.test_density && x.variant == c.variant &&
            x.filters == c.filters)
          s += x.loss;
      }
      CHECK(c.loss == doctest::Approx(s / 2).epsilon(1e-12));
    }
  }

  SUBCASE("CSV round trip and recomputed aggregates") {
    const auto dir = scratch("ablation");
    emit_report(rep, dir);
    const auto back = read_report(dir);
    REQUIRE(back.matrix.size() == rep.matrix.size());
    for (std::size_t i = 0; i < rep.matrix.size(); ++i) {
      CHECK(float(back.matrix[i].loss) == float(rep.matrix[i].loss));
      CHECK(float(back.normalized[i].loss) == float(rep.normalized[i].loss));
      CHECK(back.matrix[i].variant == rep.matrix[i].variant);
    }
    for (std::size_t i = 0; i < rep.runs.size(); ++i) CHECK(float(back.runs[i].cell.loss) == float(rep.runs[i].cell.loss));
    CHECK(back.metadata == rep.metadata);
    const auto recomputed = aggregate_losses(back.matrix);
    REQUIRE(recomputed.size() == back.aggregates.size());
    for (std::size_t i = 0; i < recomputed.size(); ++i) {
      CHECK(recomputed[i].avg_loss == doctest::Approx(back.aggregates[i].avg_loss).epsilon(1e-7));
      CHECK(recomputed[i].norm_avg_loss == doctest::Approx(back.aggregates[i].norm_avg_loss).epsilon(1e-7));
      CHECK(recomputed[i].best_count == back.aggregates[i].best_count);
    }

    SUBCASE("identical configuration gives identical bytes, any worker count") {
      auto again = cfg;
      again.jobs = 3;
      const auto dir2 = scratch("ablation2");
      emit_report(run_mass_centre_ablation(again), dir2);
      for (const char* f : {"matrix.csv", "normalized.csv", "aggregates.csv", "runs.csv", "metadata.json"})
        CHECK(slurp(dir / f) == slurp(dir2 / f));
      std::filesystem::remove_all(dir2);
    }
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("ablation reads datasets from a directory") {
  auto cfg = tiny_ablation();
  const auto dir = scratch("data");
  std::filesystem::create_directories(dir);
  cfg.data_dir = dir;
  CHECK_THROWS_AS(run_mass_centre_ablation(cfg), ConfigError);
  for (std::size_t k = 0; k < cfg.densities.size(); ++k) {
    save_dataset(gen_mass_centre(cfg.n_train, 12, cfg.densities[k], derive_seed(0, 2 * k)),
                 mass_centre_file(dir, cfg.densities[k], Split::kTrain));
    save_dataset(gen_mass_centre(cfg.n_test, 12, cfg.densities[k], derive_seed(0, 2 * k + 1)),
                 mass_centre_file(dir, cfg.densities[k], Split::kTest));
  }
  const auto from_files = run_mass_centre_ablation(cfg);
  cfg.data_dir.reset();
  CHECK(from_files.matrix == run_mass_centre_ablation(cfg).matrix);
  std::filesystem::remove_all(dir);
}

TEST_CASE("positional-bias sweep end to end") {
  PositionalBiasConfig cfg;
  cfg.depths = {1};
  cfg.seeds = {0};
  cfg.n_train = 30;
  cfg.image_size = 40;
  cfg.train.epochs = 1;
  cfg.train.batch_size = 10;
  const GreekReport rep = run_positional_bias_sweep(cfg);
  CHECK(rep.rows.size() == 3);
  CHECK(rep.aggregates.size() == 3);
  for (const auto& r : rep.rows) CHECK((r.accuracy >= 0 && r.accuracy <= 1 && std::isfinite(r.loss)));
  const auto dir = scratch("greek");
  emit_greek_report(rep, dir);
  const auto back = read_greek_report(dir);
  REQUIRE(back.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(float(back.rows[i].loss) == float(rep.rows[i].loss));
    CHECK(float(back.rows[i].accuracy) == float(rep.rows[i].accuracy));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint round trip") {
  Model m = build_model(greek_model_spec(Variant::kCoordConv, 3), 9);
  const auto stem = scratch("ckpt");
  save_checkpoint(m, stem);
  CHECK(std::filesystem::file_size(std::filesystem::path(stem) += ".bin") == m.parameter_count() * 4);
  const Model back = load_checkpoint(stem);
  CHECK(back.spec == m.spec);
  for (std::size_t i = 0; i < m.parameters().size(); ++i) CHECK(*back.parameters()[i] == *m.parameters()[i]);

  std::filesystem::resize_file(std::filesystem::path(stem) += ".bin", 8);
  CHECK_THROWS_AS(load_checkpoint(stem), FormatError);
  std::filesystem::remove(std::filesystem::path(stem) += ".bin");
  std::filesystem::remove(std::filesystem::path(stem) += ".json");
}
