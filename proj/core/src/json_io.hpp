#pragma once

// JSON mappings shared by the checkpoint, config and report code.

#include <set>
#include <string>

#include <json.hpp>

#include "nowcast/model_spec.hpp"
#include "nowcast/protocol.hpp"
#include "nowcast/training.hpp"

namespace nowcast::json_io {

using nlohmann::json;

/// Rejects keys outside `allowed`, naming the first offender and the context.
void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& context);

json to_json(const bfpf::BfpfParams& p);
bfpf::BfpfParams bfpf_from_json(const json& j, bfpf::BfpfParams base = {});

json to_json(const TransformerConfig& c);
TransformerConfig transformer_from_json(const json& j, TransformerConfig base = {});

json to_json(const WindowConfig& w);
WindowConfig window_from_json(const json& j);

json to_json(const TrainConfig& t);
TrainConfig train_from_json(const json& j, TrainConfig base = {});

json to_json(const ProtocolGrid& g);
ProtocolGrid grid_from_json(const json& j);

json to_json(const ModelSpec& s);
ModelSpec model_spec_from_json(const json& j);

}  // namespace nowcast::json_io
