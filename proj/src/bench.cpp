#include "geoconv/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "geoconv/model.hpp"

namespace geoconv {

std::vector<double> default_densities() {
  std::vector<double> d;
  for (int k = 0; k <= 6; ++k) d.push_back(0.001 * std::pow(3.0, k));
  return d;
}

namespace {

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

Dataset load_required(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("missing dataset file " + path.string());
  return load_dataset(path);
}

void report(const ProgressFn& fn, const std::string& msg) {
  if (fn) fn(msg);
}

}  // namespace

std::filesystem::path mass_centre_file(const std::filesystem::path& dir, double density, Split split) {
  return dir / ("mass-centre-" + split_name(split) + "-d" + format_g(density) + ".gpds");
}

std::filesystem::path greek_file(const std::filesystem::path& dir, Split split) {
  return dir / ("greek-" + split_name(split) + ".gpds");
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; !failed && (i = next++) < count;) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

std::vector<CellLoss> normalize_losses(const std::vector<CellLoss>& matrix) {
  std::map<std::pair<std::size_t, std::size_t>, double> totals;
  for (const auto& c : matrix) totals[{c.layers, c.filters}] += c.loss;
  std::vector<CellLoss> out = matrix;
  for (auto& c : out) {
    const double t = totals[{c.layers, c.filters}];
    if (t <= 0.0) throw NumericError("loss total of a model shape is not positive");
    c.loss /= t;
  }
  return out;
}

std::vector<VariantAggregate> aggregate_losses(const std::vector<CellLoss>& matrix) {
  std::vector<Variant> variants;
  for (const auto& c : matrix)
    if (std::find(variants.begin(), variants.end(), c.variant) == variants.end()) variants.push_back(c.variant);
  const auto normalized = normalize_losses(matrix);

  std::vector<VariantAggregate> out;
  for (Variant v : variants) {
    VariantAggregate a;
    a.variant = v;
    std::size_t cells = 0;
    std::map<std::pair<std::size_t, std::size_t>, double> share;
    for (std::size_t i = 0; i < matrix.size(); ++i) {
      if (matrix[i].variant != v) continue;
      a.avg_loss += matrix[i].loss;
      ++cells;
      share[{matrix[i].layers, matrix[i].filters}] += normalized[i].loss;
    }
    a.avg_loss /= double(cells);
    for (const auto& [shape, s] : share) a.norm_avg_loss += s;
    a.norm_avg_loss /= double(share.size());
    out.push_back(a);
  }

  // Shape-mean normalized loss per (train, test, variant).
  std::map<std::pair<double, double>, std::vector<std::pair<double, std::size_t>>> cells;
  for (const auto& c : normalized) {
    auto& slot = cells[{c.train_density, c.test_density}];
    slot.resize(variants.size());
    const auto vi = std::size_t(std::find(variants.begin(), variants.end(), c.variant) - variants.begin());
    slot[vi].first += c.loss;
    slot[vi].second += 1;
  }
  for (const auto& [key, per_variant] : cells) {
    std::size_t best = 0;
    double best_value = 0.0;
    for (std::size_t vi = 0; vi < per_variant.size(); ++vi) {
      if (per_variant[vi].second == 0) continue;
      const double mean = per_variant[vi].first / double(per_variant[vi].second);
      if (vi == 0 || mean < best_value) best = vi, best_value = mean;
    }
    ++out[best].best_count;
  }
  return out;
}

BenchReport run_mass_centre_ablation(const MassCentreConfig& cfg) {
  validate(cfg.train);
  if (cfg.densities.empty() || cfg.shapes.empty() || cfg.variants.empty() || cfg.seeds.empty())
    throw ConfigError("ablation grid has an empty axis");
  const std::size_t nd = cfg.densities.size();

  std::vector<Dataset> train_sets(nd), test_sets(nd);
  for (std::size_t k = 0; k < nd; ++k) {
    const double d = cfg.densities[k];
    if (cfg.data_dir) {
      train_sets[k] = load_required(mass_centre_file(*cfg.data_dir, d, Split::kTrain));
      test_sets[k] = load_required(mass_centre_file(*cfg.data_dir, d, Split::kTest));
    } else {
      train_sets[k] = gen_mass_centre(cfg.n_train, cfg.image_size, d, derive_seed(cfg.data_seed, 2 * k));
      test_sets[k] = gen_mass_centre(cfg.n_test, cfg.image_size, d, derive_seed(cfg.data_seed, 2 * k + 1));
    }
    for (const Dataset* ds : {&train_sets[k], &test_sets[k]}) {
      if (ds->meta.task != Task::kMassCentre) throw ConfigError("dataset for density " + format_g(d) + " is not mass-centre");
    }
  }
  report(cfg.progress, "datasets ready");

  struct Job {
    std::size_t seed, shape, variant, train;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
    for (std::size_t t = 0; t < nd; ++t)
      for (std::size_t m = 0; m < cfg.shapes.size(); ++m)
        for (std::size_t v = 0; v < cfg.variants.size(); ++v) jobs.push_back({s, m, v, t});

  // results[job][test density]
  std::vector<std::vector<double>> results(jobs.size());
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(jobs.size(), cfg.jobs, [&](std::size_t j) {
    const Job& job = jobs[j];
    const ModelShape shape = cfg.shapes[job.shape];
    const ModelSpec spec = centroid_model_spec(cfg.variants[job.variant], shape.layers, shape.filters, cfg.image_size);
    // Every variant of a (seed, shape, density) cell shares one seed.
    const std::uint64_t seed = derive_seed(cfg.seeds[job.seed], 1000 + job.train * 64 + job.shape);
    Model model = build_model(spec, seed);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    train(model, train_sets[job.train], tc);
    std::vector<double> losses;
    for (const Dataset& test : test_sets) losses.push_back(evaluate(model, test).mean_loss);
    results[j] = std::move(losses);
    const std::size_t n = ++done;
    if (cfg.progress) {
      std::lock_guard lock(progress_mutex);
      cfg.progress("run " + std::to_string(n) + "/" + std::to_string(jobs.size()) + ": seed " +
                   std::to_string(cfg.seeds[job.seed]) + " " + std::string(to_string(spec.variant)) + " " +
                   std::to_string(shape.layers) + "x" + std::to_string(shape.filters) + " train d=" +
                   format_g(cfg.densities[job.train]));
    }
  });

  BenchReport rep;
  // Matrix order: train density, test density, variant, shape.
  for (std::size_t t = 0; t < nd; ++t)
    for (std::size_t e = 0; e < nd; ++e)
      for (std::size_t v = 0; v < cfg.variants.size(); ++v)
        for (std::size_t m = 0; m < cfg.shapes.size(); ++m) {
          CellLoss cell{cfg.densities[t], cfg.densities[e], cfg.variants[v], cfg.shapes[m].layers,
                        cfg.shapes[m].filters, 0.0};
          double sum = 0.0;
          for (std::size_t j = 0; j < jobs.size(); ++j) {
            if (jobs[j].train != t || jobs[j].variant != v || jobs[j].shape != m) continue;
            CellLoss run = cell;
            run.loss = results[j][e];
            rep.runs.push_back({cfg.seeds[jobs[j].seed], run});
            sum += run.loss;
          }
          cell.loss = sum / double(cfg.seeds.size());
          rep.matrix.push_back(cell);
        }
  rep.normalized = normalize_losses(rep.matrix);
  rep.aggregates = aggregate_losses(rep.matrix);

  std::string densities, seeds;
  for (double d : cfg.densities) densities += (densities.empty() ? "" : " ") + format_g(d);
  for (auto s : cfg.seeds) seeds += (seeds.empty() ? "" : " ") + std::to_string(s);
  rep.metadata = {
      {"task", "mass-centre"},
      {"densities", densities},
      {"seeds", seeds},
      {"n_train", std::to_string(train_sets[0].n)},
      {"n_test", std::to_string(test_sets[0].n)},
      {"scale_vs_100k", format_g(double(train_sets[0].n) / 100000.0)},
      {"epochs", std::to_string(cfg.train.epochs)},
      {"batch_size", std::to_string(cfg.train.batch_size)},
      {"learning_rate", format_g(cfg.train.optimizer.learning_rate)},
      {"shapes", "i x j with i, j in {1, 2}"},
      {"normalization", "seed mean first, then divide by the per-shape total"},
  };
  return rep;
}

std::vector<GreekAggregate> aggregate_greek(const std::vector<GreekRow>& rows) {
  std::vector<GreekAggregate> out;
  std::vector<std::size_t> counts;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const GreekAggregate& a) { return a.variant == r.variant; });
    if (it == out.end()) {
      out.push_back({r.variant, 0.0, 0.0});
      counts.push_back(0);
      it = out.end() - 1;
    }
    it->avg_loss += r.loss;
    it->avg_accuracy += r.accuracy;
    ++counts[std::size_t(it - out.begin())];
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].avg_loss /= double(counts[i]);
    out[i].avg_accuracy /= double(counts[i]);
  }
  return out;
}

GreekReport run_positional_bias_sweep(const PositionalBiasConfig& cfg) {
  validate(cfg.train);
  if (cfg.depths.empty() || cfg.variants.empty() || cfg.seeds.empty())
    throw ConfigError("sweep grid has an empty axis");

  Dataset train_set, test_set;
  if (cfg.data_dir) {
    train_set = load_required(greek_file(*cfg.data_dir, Split::kTrain));
    test_set = load_required(greek_file(*cfg.data_dir, Split::kTest));
  } else {
    train_set = gen_greek_numerals(cfg.n_train, cfg.image_size, Split::kTrain, cfg.spread, cfg.data_seed);
    test_set = gen_greek_numerals(0, cfg.image_size, Split::kTest, 0, cfg.data_seed);
  }
  for (const Dataset* ds : {&train_set, &test_set})
    if (ds->meta.task != Task::kGreek) throw ConfigError("positional-bias sweep needs Greek datasets");
  report(cfg.progress, "datasets ready");

  struct Job {
    std::size_t seed, depth, variant;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
    for (std::size_t d = 0; d < cfg.depths.size(); ++d)
      for (std::size_t v = 0; v < cfg.variants.size(); ++v) jobs.push_back({s, d, v});

  std::vector<EvalResult> results(jobs.size());
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(jobs.size(), cfg.jobs, [&](std::size_t j) {
    const Job& job = jobs[j];
    const ModelSpec spec = greek_model_spec(cfg.variants[job.variant], cfg.depths[job.depth], train_set.height);
    const std::uint64_t seed = derive_seed(cfg.seeds[job.seed], 2000 + cfg.depths[job.depth]);
    Model model = build_model(spec, seed);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    train(model, train_set, tc);
    results[j] = evaluate(model, test_set);
    const std::size_t n = ++done;
    if (cfg.progress) {
      std::lock_guard lock(progress_mutex);
      cfg.progress("run " + std::to_string(n) + "/" + std::to_string(jobs.size()) + ": seed " +
                   std::to_string(cfg.seeds[job.seed]) + " " + std::string(to_string(spec.variant)) + " depth " +
                   std::to_string(spec.n_layers));
    }
  });

  GreekReport rep;
  for (std::size_t v = 0; v < cfg.variants.size(); ++v)
    for (std::size_t d = 0; d < cfg.depths.size(); ++d) {
      GreekRow row{cfg.variants[v], cfg.depths[d], 0.0, 0.0};
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].variant != v || jobs[j].depth != d) continue;
        const GreekRow run{row.variant, row.layers, results[j].mean_loss, results[j].accuracy.value_or(0.0)};
        rep.runs.push_back({cfg.seeds[jobs[j].seed], run});
        row.loss += run.loss;
        row.accuracy += run.accuracy;
      }
      row.loss /= double(cfg.seeds.size());
      row.accuracy /= double(cfg.seeds.size());
      rep.rows.push_back(row);
    }
  rep.aggregates = aggregate_greek(rep.rows);

  std::string depths, seeds;
  for (auto d : cfg.depths) depths += (depths.empty() ? "" : " ") + std::to_string(d);
  for (auto s : cfg.seeds) seeds += (seeds.empty() ? "" : " ") + std::to_string(s);
  rep.metadata = {
      {"task", "greek"},
      {"depths", depths},
      {"seeds", seeds},
      {"n_train", std::to_string(train_set.n)},
      {"n_test", std::to_string(test_set.n)},
      {"train_spread", format_g(train_set.meta.density_or_spread)},
      {"epochs", std::to_string(cfg.train.epochs)},
      {"batch_size", std::to_string(cfg.train.batch_size)},
      {"learning_rate", format_g(cfg.train.optimizer.learning_rate)},
  };
  return rep;
}

}  // namespace geoconv
