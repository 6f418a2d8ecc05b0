#ifndef STGIB_CHECKPOINT_H_
#define STGIB_CHECKPOINT_H_

#include <filesystem>
#include <memory>

#include "stgib/model.h"
#include "stgib/serialize.h"

namespace stgib {

// Checkpoint file layout:
//
//   STGIB-CKPT 1
//   <one-line JSON: model config, dims, spatial graph, scaler, extra metadata>
//   <number of arrays>
//   <name> <rank> <d0> ... <dn>        (one line per array)
//   <binary payload: every array as little-endian float64, in listed order>
//
// A wrong magic line or version raises VersionError; truncation or a
// mismatching parameter layout raises IoError.
void SaveCheckpoint(const std::filesystem::path& path, const Model& model, const Json& metadata = Json::object());

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  Json metadata;
};

LoadedCheckpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace stgib

#endif  // STGIB_CHECKPOINT_H_
