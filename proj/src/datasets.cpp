#include "geoconv/datasets.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>
#include <string>

#include "geoconv/rng.hpp"

namespace geoconv {

std::string_view to_string(Task t) { return t == Task::kMassCentre ? "mass-centre" : "greek"; }

Task parse_task(std::string_view name) {
  if (name == "mass-centre") return Task::kMassCentre;
  if (name == "greek") return Task::kGreek;
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + std::string(name) + "'");
}

Tensor Dataset::image_tensor(std::size_t i) const {
  const auto px = image(i);
  return Tensor({height, width, channels}, std::vector<float>(px.begin(), px.end()));
}

Tensor Dataset::label_tensor(std::size_t i) const {
  const auto l = label(i);
  return Tensor({label_dim}, std::vector<float>(l.begin(), l.end()));
}

std::pair<float, float> centroid(std::span<const float> image, std::size_t height, std::size_t width) {
  double rows = 0.0, cols = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      if (image[i * width + j] != 0.0f) {
        rows += double(i);
        cols += double(j);
        ++count;
      }
    }
  }
  if (count == 0) throw ConfigError("centroid of an all-black image is undefined");
  return {static_cast<float>(rows / double(count)), static_cast<float>(cols / double(count))};
}

Dataset gen_mass_centre(std::size_t n, std::size_t size, double density, std::uint64_t seed) {
  if (!(density > 0.0 && density <= 1.0)) {
    throw ConfigError("density must lie in (0, 1], got " + std::to_string(density));
  }
  if (size == 0) throw ConfigError("image size must be >= 1");
  Dataset ds;
  ds.meta = {Task::kMassCentre, seed, static_cast<float>(density)};
  ds.n = n;
  ds.height = ds.width = size;
  ds.channels = 1;
  ds.label_dim = 2;
  ds.images.assign(n * size * size, 0.0f);
  ds.labels.resize(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, i);
    std::span<float> img(ds.images.data() + i * size * size, size * size);
    bool any = false;
    while (!any) {
      for (auto& px : img) {
        px = uniform01(rng) < density ? 1.0f : 0.0f;
        any = any || px != 0.0f;
      }
    }
    const auto [r, c] = centroid(img, size, size);
    ds.labels[2 * i] = r;
    ds.labels[2 * i + 1] = c;
  }
  return ds;
}

namespace {

std::size_t glyph_width(std::size_t bars, const GlyphMetrics& g) {
  return bars * g.bar_width + (bars - 1) * g.bar_gap;
}

void check_glyph(std::size_t size, const GlyphMetrics& g) {
  if (g.bar_width == 0 || g.bar_height == 0) throw ConfigError("glyph bars must be non-empty");
  if (g.bar_height > size || glyph_width(3, g) > size) {
    throw ConfigError("glyph does not fit a " + std::to_string(size) + "x" + std::to_string(size) +
                      " canvas");
  }
}

struct Placement {
  std::int64_t top, left;
};

Placement centred(std::size_t size, std::size_t label, const GlyphMetrics& g) {
  return {std::int64_t(size - g.bar_height) / 2, std::int64_t(size - glyph_width(label + 1, g)) / 2};
}

}  // namespace

OffsetRange common_offsets(std::size_t size, const GlyphMetrics& glyph) {
  check_glyph(size, glyph);
  OffsetRange r{INT64_MIN, INT64_MAX, INT64_MIN, INT64_MAX};
  for (std::size_t label = 0; label < 3; ++label) {
    const Placement p = centred(size, label, glyph);
    const auto w = std::int64_t(glyph_width(label + 1, glyph));
    r.min_dy = std::max(r.min_dy, -p.top);
    r.max_dy = std::min(r.max_dy, std::int64_t(size) - std::int64_t(glyph.bar_height) - p.top);
    r.min_dx = std::max(r.min_dx, -p.left);
    r.max_dx = std::min(r.max_dx, std::int64_t(size) - w - p.left);
  }
  return r;
}

std::vector<float> render_numeral(std::size_t size, std::size_t label, std::int64_t dy,
                                  std::int64_t dx, const GlyphMetrics& glyph) {
  check_glyph(size, glyph);
  if (label > 2) throw ConfigError("numeral label must be 0, 1 or 2");
  const Placement p = centred(size, label, glyph);
  const std::int64_t top = p.top + dy;
  const std::int64_t left = p.left + dx;
  const auto w = std::int64_t(glyph_width(label + 1, glyph));
  if (top < 0 || left < 0 || top + std::int64_t(glyph.bar_height) > std::int64_t(size) ||
      left + w > std::int64_t(size)) {
    throw ConfigError("numeral " + std::to_string(label) + " at offset (" + std::to_string(dy) +
                      ", " + std::to_string(dx) + ") leaves the canvas");
  }
  std::vector<float> img(size * size, 0.0f);
  for (std::size_t bar = 0; bar <= label; ++bar) {
    const std::size_t x0 = std::size_t(left) + bar * (glyph.bar_width + glyph.bar_gap);
    for (std::size_t y = std::size_t(top); y < std::size_t(top) + glyph.bar_height; ++y) {
      for (std::size_t x = x0; x < x0 + glyph.bar_width; ++x) img[y * size + x] = 1.0f;
    }
  }
  return img;
}

namespace {

Dataset empty_greek(std::size_t size, std::uint64_t seed, float spread) {
  Dataset ds;
  ds.meta = {Task::kGreek, seed, spread};
  ds.height = ds.width = size;
  ds.channels = 1;
  ds.label_dim = 1;
  return ds;
}

void append(Dataset& ds, const std::vector<float>& img, std::size_t label) {
  ds.images.insert(ds.images.end(), img.begin(), img.end());
  ds.labels.push_back(static_cast<float>(label));
  ++ds.n;
}

}  // namespace

Dataset gen_greek_numerals(std::size_t n, std::size_t size, Split split, std::int64_t spread,
                           std::uint64_t seed, const GlyphMetrics& glyph) {
  const OffsetRange range = common_offsets(size, glyph);
  if (split == Split::kTest) {
    Dataset ds = empty_greek(size, seed, -1.0f);
    for (std::size_t label = 0; label < 3; ++label) {
      for (std::int64_t dy = range.min_dy; dy <= range.max_dy; ++dy) {
        for (std::int64_t dx = range.min_dx; dx <= range.max_dx; ++dx) {
          append(ds, render_numeral(size, label, dy, dx, glyph), label);
        }
      }
    }
    return ds;
  }
  if (spread < 0 || -spread < range.min_dy || spread > range.max_dy || -spread < range.min_dx ||
      spread > range.max_dx) {
    throw ConfigError("shift spread " + std::to_string(spread) + " moves glyphs out of a " +
                      std::to_string(size) + "x" + std::to_string(size) + " canvas");
  }
  Dataset ds = empty_greek(size, seed, static_cast<float>(spread));
  ds.images.reserve(n * size * size);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, i);
    const std::int64_t dy = uniform_int(rng, -spread, spread);
    const std::int64_t dx = uniform_int(rng, -spread, spread);
    append(ds, render_numeral(size, i % 3, dy, dx, glyph), i % 3);
  }
  return ds;
}

Dataset gen_greek_centred(std::size_t size, const GlyphMetrics& glyph) {
  Dataset ds = empty_greek(size, 0, 0.0f);
  for (std::size_t label = 0; label < 3; ++label) append(ds, render_numeral(size, label, 0, 0, glyph), label);
  return ds;
}

// GPDS layout, little-endian:
//   "GPDS" | u32 version | u32 N, H, W, C, label_dim | u8 task | u64 seed |
//   f32 density_or_spread | f32 images[N*H*W*C] | f32 labels[N*label_dim]
namespace {

constexpr std::uint32_t kGpdsVersion = 1;

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t offset() const { return pos_; }
  void need(std::size_t bytes, const char* what) {
    if (in_.size() - pos_ < bytes) {
      throw FormatError(std::string("truncated GPDS data: missing ") + what + " (need " +
                            std::to_string(bytes) + " bytes, have " +
                            std::to_string(in_.size() - pos_) + ")",
                        pos_);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(in_[pos_++]) << (8 * i);
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  void f32_array(std::vector<float>& out, std::size_t count, const char* what) {
    need(count * 4, what);
    out.resize(count);
    for (auto& v : out) v = f32(what);
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint32_t narrow(std::size_t v, const char* what) {
  if (v > UINT32_MAX) throw ConfigError(std::string(what) + " exceeds the GPDS u32 range");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> serialize_dataset(const Dataset& ds) {
  if (ds.images.size() != ds.n * ds.image_size() || ds.labels.size() != ds.n * ds.label_dim) {
    throw DimensionError("dataset buffers disagree with N=" + std::to_string(ds.n));
  }
  std::vector<std::uint8_t> out;
  out.reserve(kGpdsHeaderBytes + 4 * (ds.images.size() + ds.labels.size()));
  Writer w(out);
  for (char c : {'G', 'P', 'D', 'S'}) w.u8(std::uint8_t(c));
  w.u32(kGpdsVersion);
  w.u32(narrow(ds.n, "N"));
  w.u32(narrow(ds.height, "H"));
  w.u32(narrow(ds.width, "W"));
  w.u32(narrow(ds.channels, "C"));
  w.u32(narrow(ds.label_dim, "label_dim"));
  w.u8(static_cast<std::uint8_t>(ds.meta.task));
  w.u64(ds.meta.seed);
  w.f32(ds.meta.density_or_spread);
  for (float v : ds.images) w.f32(v);
  for (float v : ds.labels) w.f32(v);
  return out;
}

Dataset deserialize_dataset(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(4, "magic");
  if (!std::equal(bytes.begin(), bytes.begin() + 4, "GPDS")) throw FormatError("bad GPDS magic", 0);
  for (int i = 0; i < 4; ++i) r.u8("magic");
  const std::size_t version_at = r.offset();
  if (const auto v = r.u32("version"); v != kGpdsVersion) {
    throw FormatError("unsupported GPDS version " + std::to_string(v), version_at);
  }
  Dataset ds;
  ds.n = r.u32("N");
  ds.height = r.u32("H");
  ds.width = r.u32("W");
  ds.channels = r.u32("C");
  ds.label_dim = r.u32("label_dim");
  const std::size_t task_at = r.offset();
  const std::uint8_t task = r.u8("task id");
  if (task > static_cast<std::uint8_t>(Task::kGreek)) {
    throw FormatError("unknown GPDS task id " + std::to_string(task), task_at);
  }
  ds.meta.task = static_cast<Task>(task);
  ds.meta.seed = r.u64("seed");
  ds.meta.density_or_spread = r.f32("density/spread");
  const unsigned __int128 pixels = (unsigned __int128)ds.n * ds.height * ds.width * ds.channels;
  if (pixels * 4 > bytes.size()) {
    throw FormatError("truncated GPDS data: header declares " + std::to_string(std::uint64_t(ds.n)) +
                          " images that cannot fit in " + std::to_string(bytes.size()) + " bytes",
                      r.offset());
  }
  r.f32_array(ds.images, ds.n * ds.image_size(), "image data");
  r.f32_array(ds.labels, ds.n * ds.label_dim, "label data");
  if (!r.done()) throw FormatError("trailing bytes after GPDS payload", r.offset());
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  const auto bytes = serialize_dataset(ds);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!os) throw ConfigError("failed writing " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open dataset " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_dataset(bytes);
}

}  // namespace geoconv
