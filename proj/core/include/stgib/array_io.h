#ifndef STGIB_ARRAY_IO_H_
#define STGIB_ARRAY_IO_H_

#include <filesystem>
#include <string>
#include <vector>

#include "stgib/types.h"

namespace stgib {

// Dense array file: a text header
//
//   STGIB-ARRAY 1
//   shape <d0> <d1> ... <dn>
//
// followed by prod(shape) little-endian float64 values in row-major order.
struct NdArray {
  std::vector<int> shape;
  std::vector<double> values;
};

void WriteArray(const std::filesystem::path& path, const NdArray& array);
NdArray ReadArray(const std::filesystem::path& path);

// (T, N, F) arrays map directly; (D, rows, cols, C) grids are flattened to
// (D, rows*cols, C).
Tensor3 ArrayToSeries(const NdArray& array);
NdArray SeriesToArray(const Tensor3& series);

struct DistanceEntry {
  int from = 0;
  int to = 0;
  double cost = 0.0;
};

// CSV with header "from,to,cost".
void WriteDistances(const std::filesystem::path& path, const std::vector<DistanceEntry>& distances);
std::vector<DistanceEntry> ReadDistances(const std::filesystem::path& path);

// JSON edge list: {"num_nodes": N, "edges": [[src, dst], ...]}.
void WriteEdgeList(const std::filesystem::path& path, int num_nodes, const std::vector<Edge>& edges);
std::vector<Edge> ReadEdgeList(const std::filesystem::path& path, int* num_nodes = nullptr);

}  // namespace stgib

#endif  // STGIB_ARRAY_IO_H_
