#include "stgib/array_io.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "stgib/errors.h"
#include "stgib/serialize.h"

namespace stgib {
namespace {

constexpr char kArrayMagic[] = "STGIB-ARRAY";
constexpr int kArrayVersion = 1;

static_assert(std::endian::native == std::endian::little, "array files assume a little-endian host");

std::ifstream OpenIn(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream OpenOut(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

void WriteArray(const std::filesystem::path& path, const NdArray& array) {
  const long count = std::accumulate(array.shape.begin(), array.shape.end(), 1L, std::multiplies<long>());
  if (count != static_cast<long>(array.values.size())) throw ShapeError("WriteArray: shape does not match data");
  auto out = OpenOut(path, std::ios::out | std::ios::binary);
  out << kArrayMagic << ' ' << kArrayVersion << '\n' << "shape";
  for (int d : array.shape) out << ' ' << d;
  out << '\n';
  out.write(reinterpret_cast<const char*>(array.values.data()),
            static_cast<std::streamsize>(array.values.size() * sizeof(double)));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

NdArray ReadArray(const std::filesystem::path& path) {
  auto in = OpenIn(path, std::ios::in | std::ios::binary);
  std::string line;
  std::getline(in, line);
  std::istringstream magic(line);
  std::string tag;
  int version = 0;
  magic >> tag >> version;
  if (tag != kArrayMagic) throw VersionError("'" + path.string() + "' is not an array file");
  if (version != kArrayVersion) throw VersionError("unsupported array file version " + std::to_string(version));
  std::getline(in, line);
  std::istringstream header(line);
  header >> tag;
  if (tag != "shape") throw IoError("array file: missing shape line");
  NdArray array;
  int d = 0;
  while (header >> d) {
    if (d < 0) throw IoError("array file: negative dimension");
    array.shape.push_back(d);
  }
  if (array.shape.empty()) throw IoError("array file: empty shape");
  const long count = std::accumulate(array.shape.begin(), array.shape.end(), 1L, std::multiplies<long>());
  array.values.resize(static_cast<size_t>(count));
  in.read(reinterpret_cast<char*>(array.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double))) {
    throw IoError("array file '" + path.string() + "' is truncated");
  }
  return array;
}

Tensor3 ArrayToSeries(const NdArray& array) {
  const auto& s = array.shape;
  int t = 0, n = 0, f = 0;
  if (s.size() == 3) {
    t = s[0], n = s[1], f = s[2];
  } else if (s.size() == 4) {
    t = s[0], n = s[1] * s[2], f = s[3];
  } else if (s.size() == 2) {
    t = s[0], n = s[1], f = 1;
  } else {
    throw ShapeError("series arrays must have rank 2, 3 or 4");
  }
  Matrix m(static_cast<Eigen::Index>(t) * n, f);
  std::copy(array.values.begin(), array.values.end(), m.data());
  return Tensor3(t, n, f, std::move(m));
}

NdArray SeriesToArray(const Tensor3& series) {
  NdArray a;
  a.shape = {series.dim0, series.dim1, series.dim2};
  a.values.assign(series.data.data(), series.data.data() + series.data.size());
  return a;
}

void WriteDistances(const std::filesystem::path& path, const std::vector<DistanceEntry>& distances) {
  auto out = OpenOut(path);
  out.precision(17);
  out << "from,to,cost\n";
  for (const auto& d : distances) out << d.from << ',' << d.to << ',' << d.cost << '\n';
}

std::vector<DistanceEntry> ReadDistances(const std::filesystem::path& path) {
  auto in = OpenIn(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("distances file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "from,to,cost") throw IoError("distances file: expected header 'from,to,cost'");
  std::vector<DistanceEntry> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    DistanceEntry d;
    // Ids may be written as floats by some exporters.
    double from = 0, to = 0;
    if (!(row >> from >> to >> d.cost)) {
      throw IoError("distances file: malformed row at line " + std::to_string(line_no));
    }
    d.from = static_cast<int>(from);
    d.to = static_cast<int>(to);
    out.push_back(d);
  }
  return out;
}

void WriteEdgeList(const std::filesystem::path& path, int num_nodes, const std::vector<Edge>& edges) {
  auto out = OpenOut(path);
  out << Json{{"num_nodes", num_nodes}, {"edges", edges}}.dump() << '\n';
}

std::vector<Edge> ReadEdgeList(const std::filesystem::path& path, int* num_nodes) {
  auto in = OpenIn(path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw IoError("edge list '" + path.string() + "': " + e.what());
  }
  if (num_nodes != nullptr) *num_nodes = j.value("num_nodes", 0);
  return j.at("edges").get<std::vector<Edge>>();
}

}  // namespace stgib
