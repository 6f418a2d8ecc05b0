#ifndef STGIB_SERIALIZE_H_
#define STGIB_SERIALIZE_H_

#include <nlohmann/json.hpp>

#include "stgib/types.h"

// JSON encodings of the domain types. Doubles are written with round-trip
// precision, so decode(encode(x)) == x bit-for-bit for finite values.
namespace stgib {

using Json = nlohmann::json;

void to_json(Json& j, const Tensor3& t);
void from_json(const Json& j, Tensor3& t);
void to_json(Json& j, const Edge& e);
void from_json(const Json& j, Edge& e);
void to_json(Json& j, const SpatialGraph& g);
void from_json(const Json& j, SpatialGraph& g);
void to_json(Json& j, const TemporalGraph& g);
void from_json(const Json& j, TemporalGraph& g);
void to_json(Json& j, const STWindow& w);
void from_json(const Json& j, STWindow& w);
void to_json(Json& j, const Scaler& s);
void from_json(const Json& j, Scaler& s);
void to_json(Json& j, const STGraphDataset& d);
void from_json(const Json& j, STGraphDataset& d);
void to_json(Json& j, const PriorSchedule& s);
void from_json(const Json& j, PriorSchedule& s);
void to_json(Json& j, const Ablation& a);
void from_json(const Json& j, Ablation& a);
void to_json(Json& j, const ModelConfig& c);
void from_json(const Json& j, ModelConfig& c);
void to_json(Json& j, const DistillResult& r);
void from_json(const Json& j, DistillResult& r);

// Rejects keys of `j` that are not in `allowed`; `where` names the section.
void RejectUnknownKeys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view where);

}  // namespace stgib

#endif  // STGIB_SERIALIZE_H_
