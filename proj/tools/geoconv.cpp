// geoconv command-line front end.
//
// Exit codes: 0 success, 1 usage, 2 data/config error, 3 verification failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "geoconv/bench.hpp"
#include "geoconv/checkpoint.hpp"
#include "geoconv/report.hpp"
#include "geoconv/simd.hpp"
#include "geoconv/theorems.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace geoconv;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

std::string fnv1a_hex(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
    h ^= static_cast<std::uint8_t>(*it);
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// One manifest per invocation: what ran, with which configuration and inputs.
struct Manifest {
  std::string command;
  json config = json::object();
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> datasets;  // path -> FNV-1a 64
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void add_dataset(const fs::path& p) { datasets[p.string()] = fnv1a_hex(p); }

  void write(const fs::path& path) const {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const json j = {{"command", command},   {"config", config},
                    {"seeds", seeds},       {"version", kVersion},
                    {"datasets", datasets}, {"isa", std::string(simd::isa_name(simd::active_kernels().isa))},
                    {"wall_clock_seconds", secs}};
    std::ofstream out(path, std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw Error("cannot write manifest " + path.string());
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::vector<std::uint64_t> seed_list(std::uint64_t base, std::size_t count) {
  std::vector<std::uint64_t> s;
  for (std::size_t i = 0; i < count; ++i) s.push_back(base + i);
  return s;
}

// ---- gen-data --------------------------------------------------------------

struct GenArgs {
  std::string task = "mass-centre";
  std::size_t n = 10000;
  std::size_t size = 0;  // 0: task default
  double density = 0.1;
  std::int64_t spread = 4;
  std::string split = "train";
  std::uint64_t seed = 0;
  std::string out;
  bool grid = false;
  std::size_t n_test = 2000;
};

int cmd_gen_data(const GenArgs& a) {
  Manifest m;
  m.command = "gen-data";
  m.seeds = {a.seed};
  m.config = {{"task", a.task},   {"n", a.n},         {"size", a.size},   {"density", a.density},
              {"spread", a.spread}, {"split", a.split}, {"grid", a.grid}, {"n_test", a.n_test}};
  const Task task = parse_task(a.task);
  const std::size_t size = a.size ? a.size : (task == Task::kGreek ? 64 : 32);

  std::vector<std::pair<fs::path, Dataset>> outputs;
  if (a.grid) {
    // Every file the bench command expects, named as it expects them.
    const fs::path dir = a.out;
    if (task == Task::kMassCentre) {
      const auto densities = default_densities();
      for (std::size_t k = 0; k < densities.size(); ++k) {
        outputs.emplace_back(mass_centre_file(dir, densities[k], Split::kTrain),
                             gen_mass_centre(a.n, size, densities[k], derive_seed(a.seed, 2 * k)));
        outputs.emplace_back(mass_centre_file(dir, densities[k], Split::kTest),
                             gen_mass_centre(a.n_test, size, densities[k], derive_seed(a.seed, 2 * k + 1)));
      }
    } else {
      outputs.emplace_back(greek_file(dir, Split::kTrain), gen_greek_numerals(a.n, size, Split::kTrain, a.spread, a.seed));
      outputs.emplace_back(greek_file(dir, Split::kTest), gen_greek_numerals(0, size, Split::kTest, 0, a.seed));
    }
  } else if (task == Task::kMassCentre) {
    outputs.emplace_back(a.out, gen_mass_centre(a.n, size, a.density, a.seed));
  } else {
    outputs.emplace_back(a.out, gen_greek_numerals(a.n, size, parse_split(a.split), a.spread, a.seed));
  }

  std::printf("%-48s %8s %6s %12s\n", "file", "samples", "size", "density/sprd");
  for (const auto& [path, ds] : outputs) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_dataset(ds, path);
    m.add_dataset(path);
    std::printf("%-48s %8zu %6zu %12g\n", path.string().c_str(), ds.n, ds.height, ds.meta.density_or_spread);
  }
  m.write(a.grid ? fs::path(a.out) / "manifest.json" : fs::path(a.out + ".manifest.json"));
  return 0;
}

// ---- train / eval ----------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string variant = "geoconv";
  std::size_t layers = 1;
  std::size_t filters = 1;
  std::size_t epochs = 30;
  std::size_t batch = 64;
  double lr = 1e-3;
  std::string optimizer = "adam";
  double shift_low = -1.0, shift_high = 1.0;
  std::uint64_t seed = 0;
  std::string out = "geoconv-out";
};

int cmd_train(const TrainArgs& a) {
  Manifest m;
  m.command = "train";
  m.seeds = {a.seed};
  m.config = {{"data", a.data},          {"variant", a.variant},       {"layers", a.layers},
              {"filters", a.filters},    {"epochs", a.epochs},         {"batch", a.batch},
              {"lr", a.lr},              {"optimizer", a.optimizer},   {"shift_low", a.shift_low},
              {"shift_high", a.shift_high}};
  const Dataset ds = load_dataset(a.data);
  m.add_dataset(a.data);
  const Variant v = parse_variant(a.variant);
  ModelSpec spec = ds.meta.task == Task::kGreek ? greek_model_spec(v, a.layers, ds.height)
                                                : centroid_model_spec(v, a.layers, a.filters, ds.height);
  spec.shift_policy = ShiftPolicy::uniform(a.shift_low, a.shift_high);
  validate(spec.shift_policy);
  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.optimizer.kind = parse_optimizer(a.optimizer);
  cfg.optimizer.learning_rate = a.lr;
  cfg.seed = a.seed;
  Model model = build_model(spec, a.seed);
  m.config["model"] = to_json(spec);

  const TrainHistory h = train(model, ds, cfg);
  std::string csv = "epoch,loss\n";
  std::printf("%6s %14s\n", "epoch", "train loss");
  for (std::size_t e = 0; e < h.epoch_loss.size(); ++e) {
    csv += std::to_string(e + 1) + "," + format_value(h.epoch_loss[e]) + "\n";
    std::printf("%6zu %14.6f\n", e + 1, h.epoch_loss[e]);
  }
  const fs::path out = a.out;
  fs::create_directories(out);
  save_checkpoint(model, out / "model");
  write_text(out / "history.csv", csv);
  m.write(out / "manifest.json");
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data, const std::string& out) {
  Manifest m;
  m.command = "eval";
  m.config = {{"model", model_path}, {"data", data}};
  const Model model = load_checkpoint(model_path);
  const Dataset ds = load_dataset(data);
  m.add_dataset(data);
  const EvalResult r = evaluate(model, ds);
  json metrics = {{"mean_loss", r.mean_loss}, {"samples", r.samples}};
  std::printf("samples   %zu\nmean loss %.6f\n", r.samples, r.mean_loss);
  if (r.accuracy) {
    metrics["accuracy"] = *r.accuracy;
    std::printf("accuracy  %.4f\n", *r.accuracy);
  }
  write_text(fs::path(out) / "metrics.json", metrics.dump(2) + "\n");
  m.write(fs::path(out) / "manifest.json");
  return 0;
}

// ---- verify / flops --------------------------------------------------------

int cmd_verify(std::size_t seeds, std::uint64_t seed, const std::string& out) {
  Manifest m;
  m.command = "verify";
  m.seeds = seed_list(seed, seeds);
  m.config = {{"seeds", seeds}, {"seed", seed}};
  const auto rows = run_theorem_checks(seeds, seed);
  bool ok = true;
  std::string csv = "check,cases,max_residual,tolerance,status\n";
  std::printf("%-64s %6s %13s %9s  %s\n", "check", "cases", "max residual", "tol", "status");
  for (const auto& r : rows) {
    const std::string tol = r.tolerance ? format_value(*r.tolerance) : "-";
    const std::string status = !r.tolerance ? "report" : r.passed() ? "pass" : "FAIL";
    ok = ok && r.passed();
    std::printf("%-64s %6zu %13.3e %9s  %s\n", r.name.c_str(), r.cases, r.max_residual, tol.c_str(), status.c_str());
    csv += "\"" + r.name + "\"," + std::to_string(r.cases) + "," + format_value(r.max_residual) + "," +
           (r.tolerance ? tol : "") + "," + status + "\n";
  }
  write_text(fs::path(out) / "verify.csv", csv);
  m.config["all_passed"] = ok;
  m.write(fs::path(out) / "manifest.json");
  return ok ? 0 : kExitVerify;
}

struct FlopsArgs {
  std::size_t h = 32, w = 32, cin = 3, cout = 8, k = 3, s = 1, p = 1;
  bool models = false;
  std::string out = "geoconv-out";
};

int cmd_flops(const FlopsArgs& a) {
  Manifest m;
  m.command = "flops";
  m.config = {{"h", a.h}, {"w", a.w}, {"cin", a.cin}, {"cout", a.cout}, {"k", a.k}, {"s", a.s}, {"p", a.p}, {"models", a.models}};
  std::string csv = "scope,variant,layers,filters,h_out,w_out,flops,params\n";
  std::printf("%-10s %6s %6s %14s %10s\n", "variant", "h_out", "w_out", "flops", "params");
  const ConvGeometry g{a.k, a.k, a.s, a.p, a.cin, a.cout};
  validate(g);
  for (auto v : {Variant::kConv, Variant::kGeoConv, Variant::kCoordConv}) {
    LayerSpec spec;
    spec.variant = v;
    spec.geom = g;
    const FlopReport r = count_flops(spec, a.h, a.w);
    std::printf("%-10s %6zu %6zu %14llu %10llu\n", std::string(to_string(v)).c_str(), r.h_out, r.w_out,
                static_cast<unsigned long long>(r.flops), static_cast<unsigned long long>(r.params));
    csv += "layer," + std::string(to_string(v)) + ",1," + std::to_string(a.cout) + "," + std::to_string(r.h_out) + "," +
           std::to_string(r.w_out) + "," + std::to_string(r.flops) + "," + std::to_string(r.params) + "\n";
  }
  if (a.models) {
    // Whole-model costs of the ablation architectures (conv layers + head).
    std::printf("\n%-10s %-12s %14s %10s\n", "variant", "model", "conv flops", "params");
    auto row = [&](const ModelSpec& spec, const std::string& name) {
      const Model model = build_model(spec, 0);
      std::printf("%-10s %-12s %14llu %10zu\n", std::string(to_string(spec.variant)).c_str(), name.c_str(),
                  static_cast<unsigned long long>(model.flops()), model.parameter_count());
      csv += "model," + std::string(to_string(spec.variant)) + "," + std::to_string(spec.n_layers) + "," +
             std::to_string(spec.n_filters) + ",,," + std::to_string(model.flops()) + "," +
             std::to_string(model.parameter_count()) + "\n";
    };
    for (auto v : {Variant::kConv, Variant::kGeoConv, Variant::kCoordConv}) {
      for (std::size_t l : {1, 2})
        for (std::size_t f : {1, 2}) row(centroid_model_spec(v, l, f), "centroid " + std::to_string(l) + "x" + std::to_string(f));
      for (std::size_t d = 1; d <= 5; ++d) row(greek_model_spec(v, d), "greek d" + std::to_string(d));
    }
  }
  write_text(fs::path(a.out) / "flops.csv", csv);
  m.write(fs::path(a.out) / "manifest.json");
  return 0;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string task = "mass-centre";
  std::size_t jobs = 1;
  std::size_t seeds = 3;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;  // 0: task default
  std::size_t n_test = 2000;
  std::size_t epochs = 30;
  std::size_t batch = 64;
  double lr = 1e-3;
  std::vector<std::size_t> depths = {1, 2, 3};
  std::string data_dir;
  std::string out = "geoconv-out";
  bool quiet = false;
};

int cmd_bench(const BenchArgs& a) {
  Manifest m;
  m.command = "bench";
  m.seeds = seed_list(a.seed, a.seeds);
  m.config = {{"task", a.task},   {"jobs", a.jobs},   {"n_train", a.n_train}, {"n_test", a.n_test},
              {"epochs", a.epochs}, {"batch", a.batch}, {"lr", a.lr},           {"depths", a.depths},
              {"data_dir", a.data_dir}};
  TrainConfig tc;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch;
  tc.optimizer.learning_rate = a.lr;
  ProgressFn progress;
  if (!a.quiet) progress = [](const std::string& s) { std::fprintf(stderr, "%s\n", s.c_str()); };
  const fs::path out = a.out;

  if (parse_task(a.task) == Task::kMassCentre) {
    MassCentreConfig cfg;
    cfg.seeds = m.seeds;
    cfg.data_seed = a.seed;
    cfg.n_train = a.n_train ? a.n_train : 10000;
    cfg.n_test = a.n_test;
    cfg.train = tc;
    cfg.jobs = a.jobs;
    cfg.progress = progress;
    if (!a.data_dir.empty()) {
      cfg.data_dir = a.data_dir;
      for (double d : cfg.densities)
        for (Split s : {Split::kTrain, Split::kTest}) {
          const auto p = mass_centre_file(a.data_dir, d, s);
          if (!fs::exists(p)) throw ConfigError("missing dataset file " + p.string());
          m.add_dataset(p);
        }
    }
    const BenchReport rep = run_mass_centre_ablation(cfg);
    emit_report(rep, out);
    std::printf("%-10s %12s %14s %10s\n", "variant", "avg loss", "norm avg loss", "best");
    for (const auto& g : rep.aggregates)
      std::printf("%-10s %12.4f %14.4f %10zu\n", std::string(to_string(g.variant)).c_str(), g.avg_loss,
                  g.norm_avg_loss, g.best_count);
  } else {
    PositionalBiasConfig cfg;
    cfg.depths = a.depths;
    cfg.seeds = m.seeds;
    cfg.data_seed = a.seed;
    if (a.n_train) cfg.n_train = a.n_train;
    cfg.train = tc;
    cfg.jobs = a.jobs;
    cfg.progress = progress;
    if (!a.data_dir.empty()) {
      cfg.data_dir = a.data_dir;
      for (Split s : {Split::kTrain, Split::kTest}) {
        const auto p = greek_file(a.data_dir, s);
        if (!fs::exists(p)) throw ConfigError("missing dataset file " + p.string());
        m.add_dataset(p);
      }
    }
    const GreekReport rep = run_positional_bias_sweep(cfg);
    emit_greek_report(rep, out);
    std::printf("%-10s %7s %10s %9s\n", "variant", "layers", "loss", "accuracy");
    for (const auto& r : rep.rows)
      std::printf("%-10s %7zu %10.4f %9.4f\n", std::string(to_string(r.variant)).c_str(), r.layers, r.loss, r.accuracy);
    std::printf("\n%-10s %10s %12s\n", "variant", "avg loss", "avg accuracy");
    for (const auto& g : rep.aggregates)
      std::printf("%-10s %10.4f %12.4f\n", std::string(to_string(g.variant)).c_str(), g.avg_loss, g.avg_accuracy);
  }
  m.write(out / "manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GeoPos / CoordConv / Conv ablation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::string isa;
  app.add_option("--isa", isa, "Force the kernel variant (scalar, avx2)");

  GenArgs gen;
  auto* g = app.add_subcommand("gen-data", "Generate a dataset file (GPDS)");
  g->add_option("--task", gen.task, "mass-centre or greek")->capture_default_str();
  g->add_option("--n", gen.n, "Number of samples (unused for the Greek test split)")->capture_default_str();
  g->add_option("--size", gen.size, "Canvas size in pixels (default 32 mass-centre, 64 greek)");
  g->add_option("--density", gen.density, "White-pixel probability (mass-centre)")->capture_default_str();
  g->add_option("--spread", gen.spread, "Max glyph offset per axis (greek train)")->capture_default_str();
  g->add_option("--split", gen.split, "train or test (greek)")->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  g->add_option("--out", gen.out, "Output file, or directory with --grid")->required();
  g->add_flag("--grid", gen.grid, "Write every file the bench command reads into --out");
  g->add_option("--n-test", gen.n_test, "Test samples per density with --grid")->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train one model on a dataset file");
  t->add_option("--data", tr.data, "Training dataset (GPDS)")->required();
  t->add_option("--variant", tr.variant, "conv, coordconv or geoconv")->capture_default_str();
  t->add_option("--layers", tr.layers, "Number of conv layers")->capture_default_str();
  t->add_option("--filters", tr.filters, "Filters per layer (mass-centre models)")->capture_default_str();
  t->add_option("--epochs", tr.epochs)->capture_default_str();
  t->add_option("--batch", tr.batch)->capture_default_str();
  t->add_option("--lr", tr.lr)->capture_default_str();
  t->add_option("--optimizer", tr.optimizer, "adam or sgd")->capture_default_str();
  t->add_option("--shift-low", tr.shift_low, "GeoPos shift support, lower end")->capture_default_str();
  t->add_option("--shift-high", tr.shift_high, "GeoPos shift support, upper end")->capture_default_str();
  t->add_option("--seed", tr.seed)->capture_default_str();
  t->add_option("--out", tr.out, "Output directory")->capture_default_str();

  std::string eval_model, eval_data, eval_out = "geoconv-out";
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset file");
  e->add_option("--model", eval_model, "Checkpoint stem (model.json / model.bin)")->required();
  e->add_option("--data", eval_data, "Dataset (GPDS)")->required();
  e->add_option("--out", eval_out, "Output directory")->capture_default_str();

  std::size_t verify_seeds = 50;
  std::uint64_t verify_seed = 0;
  std::string verify_out = "geoconv-out";
  auto* v = app.add_subcommand("verify", "Numerical checks of the positional-channel identities");
  v->add_option("--seeds", verify_seeds, "Random instances per check")->capture_default_str();
  v->add_option("--seed", verify_seed, "Base seed")->capture_default_str();
  v->add_option("--out", verify_out, "Output directory")->capture_default_str();

  FlopsArgs fl;
  auto* f = app.add_subcommand("flops", "FLOP and parameter counts per variant");
  f->set_help_flag("--help", "Print this help message and exit");  // --h is the input height
  f->add_option("--h", fl.h)->capture_default_str();
  f->add_option("--w", fl.w)->capture_default_str();
  f->add_option("--cin", fl.cin)->capture_default_str();
  f->add_option("--cout", fl.cout)->capture_default_str();
  f->add_option("--k", fl.k, "Square kernel size")->capture_default_str();
  f->add_option("--s", fl.s, "Stride")->capture_default_str();
  f->add_option("--p", fl.p, "Padding")->capture_default_str();
  f->add_flag("--models", fl.models, "Also list the ablation model architectures");
  f->add_option("--out", fl.out, "Output directory")->capture_default_str();

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "Run an ablation and write CSV reports");
  b->add_option("--task", be.task, "mass-centre or greek")->capture_default_str();
  b->add_option("--jobs", be.jobs, "Worker threads")->capture_default_str();
  b->add_option("--seeds", be.seeds, "Number of seeds (seed, seed+1, ...)")->capture_default_str();
  b->add_option("--seed", be.seed, "Base seed (also seeds generated data)")->capture_default_str();
  b->add_option("--n-train", be.n_train, "Training samples (default 10000)");
  b->add_option("--n-test", be.n_test, "Test samples per density (mass-centre)")->capture_default_str();
  b->add_option("--epochs", be.epochs)->capture_default_str();
  b->add_option("--batch", be.batch)->capture_default_str();
  b->add_option("--lr", be.lr)->capture_default_str();
  b->add_option("--depths", be.depths, "Model depths (greek)")->capture_default_str();
  b->add_option("--data-dir", be.data_dir, "Read datasets written by gen-data --grid instead of generating");
  b->add_option("--out", be.out, "Output directory")->capture_default_str();
  b->add_flag("--quiet", be.quiet, "No progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (!isa.empty()) simd::set_active_isa(isa == "avx2" ? simd::Isa::kAvx2 : isa == "scalar" ? simd::Isa::kScalar
                                                           : throw ConfigError("unknown ISA '" + isa + "'"));
    if (g->parsed()) return cmd_gen_data(gen);
    if (t->parsed()) return cmd_train(tr);
    if (e->parsed()) return cmd_eval(eval_model, eval_data, eval_out);
    if (v->parsed()) return cmd_verify(verify_seeds, verify_seed, verify_out);
    if (f->parsed()) return cmd_flops(fl);
    if (b->parsed()) return cmd_bench(be);
  } catch (const Error& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitData;
  } catch (const std::filesystem::filesystem_error& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitData;
  } catch (const nlohmann::json::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitData;
  }
  return kExitUsage;
}
