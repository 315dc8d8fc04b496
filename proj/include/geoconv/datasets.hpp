#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "geoconv/tensor.hpp"

namespace geoconv {

enum class Task : std::uint8_t { kMassCentre = 0, kGreek = 1 };

std::string_view to_string(Task t);
Task parse_task(std::string_view name);

struct DatasetMeta {
  Task task = Task::kMassCentre;
  std::uint64_t seed = 0;
  /// Pixel density for centre-of-mass sets; shift spread for Greek training
  /// sets; -1 for the exhaustive-translation Greek test set.
  float density_or_spread = 0.0f;

  bool operator==(const DatasetMeta&) const = default;
};

/// N images of [H,W,C] plus N label rows, both stored flat and row-major.
/// Kept flat rather than as a Tensor so that N = 0 is representable.
struct Dataset {
  DatasetMeta meta;
  std::size_t n = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::size_t label_dim = 0;
  std::vector<float> images;
  std::vector<float> labels;

  std::size_t image_size() const noexcept { return height * width * channels; }
  std::span<const float> image(std::size_t i) const {
    return std::span<const float>(images).subspan(i * image_size(), image_size());
  }
  std::span<const float> label(std::size_t i) const {
    return std::span<const float>(labels).subspan(i * label_dim, label_dim);
  }
  Tensor image_tensor(std::size_t i) const;
  Tensor label_tensor(std::size_t i) const;

  bool operator==(const Dataset&) const = default;
};

/// (mean row, mean col) of the non-zero pixels of an H x W single-channel image.
/// Throws ConfigError for an all-black image.
std::pair<float, float> centroid(std::span<const float> image, std::size_t height, std::size_t width);

/// Binary images where each pixel is white with probability `density`;
/// all-black draws are redrawn. Sample i uses the stream derived from (seed, i).
Dataset gen_mass_centre(std::size_t n, std::size_t size, double density, std::uint64_t seed);

/// Raster metrics of the I / II / III glyphs: vertical bars side by side.
struct GlyphMetrics {
  std::size_t bar_width = 3;
  std::size_t bar_height = 24;
  std::size_t bar_gap = 4;
};

enum class Split { kTrain, kTest };

Split parse_split(std::string_view name);

/// Inclusive range of offsets from the centred placement.
struct OffsetRange {
  std::int64_t min_dy, max_dy, min_dx, max_dx;
};

/// Offsets at which every numeral fits on a size x size canvas.
OffsetRange common_offsets(std::size_t size, const GlyphMetrics& glyph = {});

/// Draws numeral `label` (0 -> I, 1 -> II, 2 -> III) centred and then moved by
/// (dy, dx). Throws ConfigError if any stroke leaves the canvas.
std::vector<float> render_numeral(std::size_t size, std::size_t label, std::int64_t dy,
                                  std::int64_t dx, const GlyphMetrics& glyph = {});

/// Train split: n images, labels cycling 0,1,2, offsets uniform in
/// [-spread, spread] per axis. Test split: the exhaustive-translation set, one
/// image per offset in common_offsets() per class (n, spread and seed unused).
Dataset gen_greek_numerals(std::size_t n, std::size_t size, Split split, std::int64_t spread,
                           std::uint64_t seed, const GlyphMetrics& glyph = {});

/// Every class at the centred position only.
Dataset gen_greek_centred(std::size_t size, const GlyphMetrics& glyph = {});

inline constexpr std::size_t kGpdsHeaderBytes = 41;

std::vector<std::uint8_t> serialize_dataset(const Dataset& ds);
Dataset deserialize_dataset(std::span<const std::uint8_t> bytes);

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace geoconv
