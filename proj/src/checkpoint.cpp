#include "geoconv/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace geoconv {

namespace {

std::filesystem::path with_ext(std::filesystem::path stem, const char* ext) {
  if (stem.extension() == ".json" || stem.extension() == ".bin") stem.replace_extension();
  stem += ext;
  return stem;
}

std::vector<std::string> parameter_names(const Model& m) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < m.conv.size(); ++l) {
    names.push_back("conv" + std::to_string(l) + ".filters");
    names.push_back("conv" + std::to_string(l) + ".bias");
  }
  names.push_back("dense.weights");
  names.push_back("dense.bias");
  return names;
}

}  // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& stem) {
  const auto params = model.parameters();
  const auto names = parameter_names(model);
  nlohmann::json index = nlohmann::json::array();
  std::vector<std::uint8_t> blob;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    index.push_back({{"name", names[i]}, {"shape", params[i]->shape()}, {"offset", offset}});
    for (float v : params[i]->data()) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) blob.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
    offset += params[i]->size();
  }
  const nlohmann::json manifest = {{"format", "geoconv-checkpoint"},
                                   {"version", 1},
                                   {"model", to_json(model.spec)},
                                   {"floats", offset},
                                   {"parameters", index}};
  const auto json_path = with_ext(stem, ".json"), bin_path = with_ext(stem, ".bin");
  std::ofstream js(json_path, std::ios::trunc);
  js << manifest.dump(2) << '\n';
  std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
  bin.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  if (!js || !bin) throw Error("cannot write checkpoint " + with_ext(stem, "").string());
}

Model load_checkpoint(const std::filesystem::path& stem) {
  const auto json_path = with_ext(stem, ".json"), bin_path = with_ext(stem, ".bin");
  std::ifstream js(json_path);
  if (!js) throw ConfigError("missing checkpoint manifest " + json_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(json_path.string() + ": " + e.what(), 0);
  }
  if (manifest.value("format", "") != "geoconv-checkpoint") throw FormatError("not a checkpoint manifest", 0);

  Model model = build_model(model_spec_from_json(manifest.at("model")), 0);
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw ConfigError("missing checkpoint blob " + bin_path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

  const auto params = model.parameters();
  const auto& index = manifest.at("parameters");
  if (index.size() != params.size()) throw FormatError("checkpoint index lists a different layer count", 0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape shape = index[i].at("shape").get<Shape>();
    const auto offset = index[i].at("offset").get<std::size_t>();
    if (shape != params[i]->shape())
      throw FormatError("parameter " + index[i].at("name").get<std::string>() + " has shape " +
                            shape_to_string(shape) + ", model expects " + shape_to_string(params[i]->shape()),
                        offset * 4);
    if ((offset + params[i]->size()) * 4 > bytes.size())
      throw FormatError("checkpoint blob truncated", bytes.size());
    auto dst = params[i]->data();
    for (std::size_t k = 0; k < dst.size(); ++k) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b)
        bits |= std::uint32_t(static_cast<std::uint8_t>(bytes[(offset + k) * 4 + b])) << (8 * b);
      dst[k] = std::bit_cast<float>(bits);
    }
  }
  if (bytes.size() != manifest.at("floats").get<std::size_t>() * 4)
    throw FormatError("checkpoint blob has trailing bytes", manifest.at("floats").get<std::size_t>() * 4);
  return model;
}

}  // namespace geoconv
