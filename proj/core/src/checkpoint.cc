#include "stgib/checkpoint.h"

#include <bit>
#include <fstream>
#include <sstream>
#include <string>

#include "stgib/errors.h"

namespace stgib {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace {

constexpr char kMagic[] = "STGIB-CKPT";
constexpr int kVersion = 1;

Json DimsToJson(const ModelDims& d) {
  return {{"input_steps", d.input_steps},
          {"output_steps", d.output_steps},
          {"num_nodes", d.num_nodes},
          {"features", d.features},
          {"output_features", d.output_features}};
}

ModelDims DimsFromJson(const Json& j) {
  ModelDims d;
  d.input_steps = j.at("input_steps").get<int>();
  d.output_steps = j.at("output_steps").get<int>();
  d.num_nodes = j.at("num_nodes").get<int>();
  d.features = j.at("features").get<int>();
  d.output_features = j.at("output_features").get<int>();
  return d;
}

}  // namespace

void SaveCheckpoint(const std::filesystem::path& path, const Model& model, const Json& metadata) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  Json header;
  header["config"] = model.config();
  header["dims"] = DimsToJson(model.dims());
  header["spatial_graph"] = model.spatial_graph();
  header["scaler"] = model.scaler();
  header["metadata"] = metadata;
  out << kMagic << ' ' << kVersion << '\n' << header.dump() << '\n' << model.params().size() << '\n';
  for (const Param& p : model.params().params()) {
    out << p.name << ' ' << p.shape.size();
    for (int d : p.shape) out << ' ' << d;
    out << '\n';
  }
  for (const Param& p : model.params().params()) {
    out.write(reinterpret_cast<const char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

LoadedCheckpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw VersionError("checkpoint '" + path.string() + "' is empty");
  {
    std::istringstream magic(line);
    std::string tag;
    int version = -1;
    if (!(magic >> tag >> version) || tag != kMagic) throw VersionError("'" + path.string() + "' is not a checkpoint");
    if (version != kVersion) throw VersionError("unsupported checkpoint version " + std::to_string(version));
  }
  if (!std::getline(in, line)) throw IoError("checkpoint truncated before header");
  Json header;
  try {
    header = Json::parse(line);
  } catch (const Json::exception& e) {
    throw VersionError(std::string("checkpoint header is corrupted: ") + e.what());
  }

  LoadedCheckpoint loaded;
  try {
    auto config = header.at("config").get<ModelConfig>();
    auto dims = DimsFromJson(header.at("dims"));
    auto graph = header.at("spatial_graph").get<SpatialGraph>();
    auto scaler = header.at("scaler").get<Scaler>();
    loaded.model = std::make_unique<Model>(std::move(config), dims, std::move(graph), scaler, 0);
    loaded.metadata = header.value("metadata", Json::object());
  } catch (const Json::exception& e) {
    throw VersionError(std::string("checkpoint header is corrupted: ") + e.what());
  }

  size_t count = 0;
  if (!std::getline(in, line)) throw IoError("checkpoint truncated before array table");
  try {
    count = std::stoul(line);
  } catch (const std::exception&) {
    throw VersionError("checkpoint array count is corrupted");
  }
  ParamSet& params = loaded.model->params();
  if (count != params.size()) throw IoError("checkpoint holds " + std::to_string(count) + " arrays, model expects " + std::to_string(params.size()));
  for (size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw IoError("checkpoint truncated in array table");
    std::istringstream ls(line);
    std::string name;
    size_t rank = 0;
    ls >> name >> rank;
    std::vector<int> shape(rank);
    for (int& d : shape) ls >> d;
    if (!ls) throw VersionError("checkpoint array table is corrupted");
    const Param& expected = params.params()[i];
    if (name != expected.name || shape != expected.shape) {
      throw IoError("checkpoint array '" + name + "' does not match model parameter '" + expected.name + "'");
    }
  }
  for (Param& p : params.params()) {
    in.read(reinterpret_cast<char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    if (!in) throw IoError("checkpoint payload truncated at '" + p.name + "'");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("checkpoint has trailing bytes");
  return loaded;
}

}  // namespace stgib
