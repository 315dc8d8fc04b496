#include "geoconv/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace geoconv {

namespace {

using Row = std::vector<std::string>;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error("write failed for " + path.string());
}

void write_csv(const std::filesystem::path& path, const Row& header, const std::vector<Row>& rows) {
  auto out = open_out(path);
  auto line = [&](const Row& r) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  finish(out, path);
}

std::vector<Row> read_csv(const std::filesystem::path& path, const Row& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<Row> rows;
  std::string text;
  bool first = true;
  while (std::getline(in, text)) {
    if (text.empty()) continue;
    Row r;
    std::stringstream ss(text);
    for (std::string cell; std::getline(ss, cell, ',');) r.push_back(cell);
    if (first) {
      if (r != header) throw Error("unexpected header in " + path.string());
      first = false;
      continue;
    }
    if (r.size() != header.size())
      throw Error(path.string() + ": row " + std::to_string(rows.size() + 1) + " has " +
                  std::to_string(r.size()) + " fields");
    rows.push_back(std::move(r));
  }
  if (first) throw Error(path.string() + " has no header");
  return rows;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw Error("bad number '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s) { return static_cast<std::size_t>(std::stoull(s)); }

void write_metadata(const std::filesystem::path& path, const std::map<std::string, std::string>& meta) {
  auto out = open_out(path);
  out << nlohmann::json(meta).dump(2) << '\n';
  finish(out, path);
}

std::map<std::string, std::string> read_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return {};
  return nlohmann::json::parse(in).get<std::map<std::string, std::string>>();
}

const Row kCellHeader = {"train_density", "test_density", "variant", "layers", "filters", "loss"};
const Row kRunHeader = {"seed", "train_density", "test_density", "variant", "layers", "filters", "loss"};
const Row kAggHeader = {"variant", "avg_loss", "norm_avg_loss", "best_count"};
const Row kGreekHeader = {"variant", "layers", "loss", "accuracy"};
const Row kGreekRunHeader = {"seed", "variant", "layers", "loss", "accuracy"};
const Row kGreekAggHeader = {"variant", "avg_loss", "avg_accuracy"};

Row cell_row(const CellLoss& c) {
  return {format_value(c.train_density), format_value(c.test_density), std::string(to_string(c.variant)),
          std::to_string(c.layers), std::to_string(c.filters), format_value(c.loss)};
}

CellLoss parse_cell(const Row& r, std::size_t at) {
  return {parse_double(r[at]), parse_double(r[at + 1]), parse_variant(r[at + 2]),
          parse_size(r[at + 3]), parse_size(r[at + 4]), parse_double(r[at + 5])};
}

Row greek_row(const GreekRow& g) {
  return {std::string(to_string(g.variant)), std::to_string(g.layers), format_value(g.loss), format_value(g.accuracy)};
}

GreekRow parse_greek(const Row& r, std::size_t at) {
  return {parse_variant(r[at]), parse_size(r[at + 1]), parse_double(r[at + 2]), parse_double(r[at + 3])};
}

}  // namespace

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<std::filesystem::path> emit_report(const BenchReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<Row> matrix, normalized, runs, aggregates;
  for (const auto& c : report.matrix) matrix.push_back(cell_row(c));
  for (const auto& c : report.normalized) normalized.push_back(cell_row(c));
  for (const auto& r : report.runs) {
    Row row = cell_row(r.cell);
    row.insert(row.begin(), std::to_string(r.seed));
    runs.push_back(std::move(row));
  }
  for (const auto& a : report.aggregates)
    aggregates.push_back({std::string(to_string(a.variant)), format_value(a.avg_loss), format_value(a.norm_avg_loss),
                          std::to_string(a.best_count)});
  const std::vector<std::filesystem::path> paths = {dir / "matrix.csv", dir / "normalized.csv", dir / "aggregates.csv",
                                                    dir / "runs.csv", dir / "metadata.json"};
  write_csv(paths[0], kCellHeader, matrix);
  write_csv(paths[1], kCellHeader, normalized);
  write_csv(paths[2], kAggHeader, aggregates);
  write_csv(paths[3], kRunHeader, runs);
  write_metadata(paths[4], report.metadata);
  return paths;
}

BenchReport read_report(const std::filesystem::path& dir) {
  BenchReport rep;
  for (const auto& r : read_csv(dir / "matrix.csv", kCellHeader)) rep.matrix.push_back(parse_cell(r, 0));
  for (const auto& r : read_csv(dir / "normalized.csv", kCellHeader)) rep.normalized.push_back(parse_cell(r, 0));
  for (const auto& r : read_csv(dir / "runs.csv", kRunHeader)) rep.runs.push_back({std::stoull(r[0]), parse_cell(r, 1)});
  for (const auto& r : read_csv(dir / "aggregates.csv", kAggHeader))
    rep.aggregates.push_back({parse_variant(r[0]), parse_double(r[1]), parse_double(r[2]), parse_size(r[3])});
  rep.metadata = read_metadata(dir / "metadata.json");
  return rep;
}

std::vector<std::filesystem::path> emit_greek_report(const GreekReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<Row> rows, runs, aggregates;
  for (const auto& g : report.rows) rows.push_back(greek_row(g));
  for (const auto& r : report.runs) {
    Row row = greek_row(r.row);
    row.insert(row.begin(), std::to_string(r.seed));
    runs.push_back(std::move(row));
  }
  for (const auto& a : report.aggregates)
    aggregates.push_back({std::string(to_string(a.variant)), format_value(a.avg_loss), format_value(a.avg_accuracy)});
  const std::vector<std::filesystem::path> paths = {dir / "greek.csv", dir / "greek_aggregates.csv",
                                                    dir / "greek_runs.csv", dir / "greek_metadata.json"};
  write_csv(paths[0], kGreekHeader, rows);
  write_csv(paths[1], kGreekAggHeader, aggregates);
  write_csv(paths[2], kGreekRunHeader, runs);
  write_metadata(paths[3], report.metadata);
  return paths;
}

GreekReport read_greek_report(const std::filesystem::path& dir) {
  GreekReport rep;
  for (const auto& r : read_csv(dir / "greek.csv", kGreekHeader)) rep.rows.push_back(parse_greek(r, 0));
  for (const auto& r : read_csv(dir / "greek_runs.csv", kGreekRunHeader))
    rep.runs.push_back({std::stoull(r[0]), parse_greek(r, 1)});
  for (const auto& r : read_csv(dir / "greek_aggregates.csv", kGreekAggHeader))
    rep.aggregates.push_back({parse_variant(r[0]), parse_double(r[1]), parse_double(r[2])});
  rep.metadata = read_metadata(dir / "greek_metadata.json");
  return rep;
}

}  // namespace geoconv
