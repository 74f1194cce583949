#include "llab/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "llab/errors.hpp"

namespace llab {

namespace {

constexpr char kMagic[4] = {'L', 'L', 'A', 'B'};
constexpr std::uint16_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

template <typename T>
void write_le(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const char* what) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw FormatError(std::string("checkpoint truncated while reading ") + what);
  }
  return value;
}

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Relu: return "relu";
    case LayerKind::SoftmaxOutput: return "softmax-output";
  }
  return "?";
}

}  // namespace

nlohmann::json network_spec_to_json(const NetworkSpec& spec) {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerSpec& l : spec.layers) {
    nlohmann::json j;
    j["kind"] = kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::Dense:
        j["in"] = l.in;
        j["out"] = l.out;
        break;
      case LayerKind::Conv2d:
        j["in_ch"] = l.in_ch;
        j["out_ch"] = l.out_ch;
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        j["pad"] = l.pad;
        break;
      case LayerKind::MaxPool:
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        break;
      default:
        break;
    }
    layers.push_back(std::move(j));
  }
  return nlohmann::json{{"layers", std::move(layers)}};
}

NetworkSpec network_spec_from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  for (const auto& l : j.at("layers")) {
    const std::string kind = l.at("kind").get<std::string>();
    if (kind == "dense") {
      spec.layers.push_back(LayerSpec::dense(l.at("in"), l.at("out")));
    } else if (kind == "conv2d") {
      spec.layers.push_back(LayerSpec::conv2d(l.at("in_ch"), l.at("out_ch"), l.at("kernel"),
                                              l.value("stride", 1), l.value("pad", 0)));
    } else if (kind == "maxpool") {
      spec.layers.push_back(LayerSpec::maxpool(l.at("kernel"), l.at("stride")));
    } else if (kind == "relu") {
      spec.layers.push_back(LayerSpec::relu());
    } else if (kind == "softmax-output") {
      spec.layers.push_back(LayerSpec::softmax_output());
    } else {
      throw FormatError("unknown layer kind '" + kind + "' in checkpoint header");
    }
  }
  spec.validate();
  return spec;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  nlohmann::json header;
  header["architecture"] = network_spec_to_json(ck.spec);
  nlohmann::json layout = nlohmann::json::array();
  for (const ParamBlock& b : ck.params.layout->blocks) {
    layout.push_back({{"layer", b.layer},
                      {"role", b.role == ParamRole::Weight ? "weight" : "bias"},
                      {"shape", b.shape},
                      {"offset", b.offset},
                      {"size", b.size}});
  }
  header["layout"] = std::move(layout);
  header["meta"] = ck.meta;
  const std::string header_str = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open checkpoint file for writing: " + path.string());
  os.write(kMagic, 4);
  write_le<std::uint16_t>(os, kVersion);
  write_le<std::uint64_t>(os, header_str.size());
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  os.write(reinterpret_cast<const char*>(ck.params.values.data()),
           static_cast<std::streamsize>(ck.params.values.size() * sizeof(double)));
  if (!os) throw FormatError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint file: " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("not a checkpoint file (bad magic): " + path.string());
  }
  const auto version = read_le<std::uint16_t>(is, "version");
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = read_le<std::uint64_t>(is, "header length");
  std::string header_str(header_len, '\0');
  if (!is.read(header_str.data(), static_cast<std::streamsize>(header_len))) {
    throw FormatError("checkpoint truncated while reading header: " + path.string());
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  Checkpoint ck;
  ck.spec = network_spec_from_json(header.at("architecture"));
  ck.meta = header.value("meta", nlohmann::json::object());

  auto layout = shared_layout(ck.spec);
  std::vector<double> values(layout->total);
  if (!is.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(values.size() * sizeof(double)))) {
    throw FormatError("checkpoint truncated: expected " + std::to_string(layout->total) +
                      " parameter values in " + path.string());
  }
  // Sanity: the stored layout must agree with the architecture.
  const auto& stored = header.at("layout");
  if (stored.size() != layout->blocks.size()) {
    throw FormatError("checkpoint layout does not match its architecture");
  }
  for (std::size_t i = 0; i < layout->blocks.size(); ++i) {
    if (stored[i].at("offset").get<std::size_t>() != layout->blocks[i].offset ||
        stored[i].at("size").get<std::size_t>() != layout->blocks[i].size) {
      throw FormatError("checkpoint layout does not match its architecture");
    }
  }
  ck.params = unflatten(std::move(values), std::move(layout));
  return ck;
}

}  // namespace llab
