#include "json_io.hpp"

namespace nowcast::json_io {

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& context) {
  if (!j.is_object()) throw Error("config: " + context + " must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.contains(key)) throw Error("config: unknown key '" + key + "' in " + context);
  }
}

json to_json(const bfpf::BfpfParams& p) {
  return json{{"enabled", true},           {"tau", p.tau},
              {"lambda_init", p.lambda_scale}, {"alpha_init", p.alpha_scale},
              {"nonzero_focus", p.nonzero_focus}, {"temporal_focus", p.temporal_focus}};
}

bfpf::BfpfParams bfpf_from_json(const json& j, bfpf::BfpfParams base) {
  check_keys(j, {"enabled", "tau", "lambda_init", "alpha_init", "nonzero_focus", "temporal_focus"}, "bfpf");
  read_if(j, "tau", base.tau);
  read_if(j, "lambda_init", base.lambda_scale);
  read_if(j, "alpha_init", base.alpha_scale);
  read_if(j, "nonzero_focus", base.nonzero_focus);
  read_if(j, "temporal_focus", base.temporal_focus);
  base.validate();
  return base;
}

json to_json(const TransformerConfig& c) {
  json j{{"d_model", c.d_model}, {"n_heads", c.n_heads}, {"n_layers", c.n_layers}, {"ff_dim", c.ff_dim}};
  json b = to_json(c.bfpf);
  b["enabled"] = c.bfpf_enabled;
  j["bfpf"] = b;
  return j;
}

TransformerConfig transformer_from_json(const json& j, TransformerConfig base) {
  read_if(j, "d_model", base.d_model);
  read_if(j, "n_heads", base.n_heads);
  read_if(j, "n_layers", base.n_layers);
  read_if(j, "ff_dim", base.ff_dim);
  if (j.contains("bfpf")) {
    const json& b = j.at("bfpf");
    base.bfpf = bfpf_from_json(b, base.bfpf);
    base.bfpf_enabled = b.value("enabled", true);
  }
  base.validate();
  return base;
}

json to_json(const WindowConfig& w) {
  return json{{"input_length", w.input_length},
              {"output_length", w.output_length},
              {"resolution", w.resolution},
              {"stride", w.stride}};
}

WindowConfig window_from_json(const json& j) {
  check_keys(j, {"input_length", "output_length", "resolution", "stride"}, "window");
  WindowConfig w;
  read_if(j, "input_length", w.input_length);
  read_if(j, "output_length", w.output_length);
  read_if(j, "resolution", w.resolution);
  read_if(j, "stride", w.stride);
  w.validate();
  return w;
}

json to_json(const TrainConfig& t) {
  return json{{"learning_rate", t.learning_rate}, {"beta1", t.beta1},
              {"beta2", t.beta2},                 {"epsilon", t.epsilon},
              {"batch_size", t.batch_size},       {"max_epochs", t.max_epochs},
              {"patience", t.patience},           {"max_batches_per_epoch", t.max_batches_per_epoch}};
}

TrainConfig train_from_json(const json& j, TrainConfig base) {
  check_keys(j,
             {"learning_rate", "beta1", "beta2", "epsilon", "batch_size", "max_epochs", "patience",
              "max_batches_per_epoch"},
             "train");
  read_if(j, "learning_rate", base.learning_rate);
  read_if(j, "beta1", base.beta1);
  read_if(j, "beta2", base.beta2);
  read_if(j, "epsilon", base.epsilon);
  read_if(j, "batch_size", base.batch_size);
  read_if(j, "max_epochs", base.max_epochs);
  read_if(j, "patience", base.patience);
  read_if(j, "max_batches_per_epoch", base.max_batches_per_epoch);
  base.validate();
  return base;
}

json to_json(const ProtocolGrid& g) {
  return json{{"input_lengths", g.input_lengths}, {"output_lengths", g.output_lengths},
              {"resolutions", g.resolutions},     {"horizon_hours", g.horizon_hours},
              {"seeds", g.seeds},                 {"multi_scale", g.multi_scale},
              {"multi_resolution", g.multi_resolution}};
}

ProtocolGrid grid_from_json(const json& j) {
  check_keys(j,
             {"input_lengths", "output_lengths", "resolutions", "horizon_hours", "seeds", "multi_scale",
              "multi_resolution"},
             "grid");
  ProtocolGrid g;
  read_if(j, "input_lengths", g.input_lengths);
  read_if(j, "output_lengths", g.output_lengths);
  read_if(j, "resolutions", g.resolutions);
  read_if(j, "horizon_hours", g.horizon_hours);
  read_if(j, "seeds", g.seeds);
  read_if(j, "multi_scale", g.multi_scale);
  read_if(j, "multi_resolution", g.multi_resolution);
  g.validate();
  return g;
}

json to_json(const ModelSpec& s) {
  json j{{"name", s.name}, {"type", std::string(to_string(s.kind))}};
  if (s.kind == ModelKind::MovingAverage) j["ma_window"] = s.ma_window;
  if (s.kind == ModelKind::Transformer) {
    const json t = to_json(s.transformer);
    for (const auto& [k, v] : t.items()) j[k] = v;
  }
  return j;
}

ModelSpec model_spec_from_json(const json& j) {
  check_keys(j, {"name", "type", "ma_window", "d_model", "n_heads", "n_layers", "ff_dim", "bfpf"}, "model");
  ModelSpec s;
  s.kind = model_kind_from_string(j.at("type").get<std::string>());
  read_if(j, "ma_window", s.ma_window);
  if (s.kind != ModelKind::MovingAverage && j.contains("ma_window"))
    throw Error("config: ma_window only applies to moving_average");
  const bool transformer_keys = j.contains("d_model") || j.contains("n_heads") || j.contains("n_layers") ||
                                j.contains("ff_dim") || j.contains("bfpf");
  if (s.kind == ModelKind::Transformer) {
    s.transformer = transformer_from_json(j);
  } else if (transformer_keys) {
    throw Error("config: transformer keys given for a non-transformer model");
  }
  if (j.contains("name")) {
    s.name = j.at("name").get<std::string>();
  } else {
    s.name = std::string(to_string(s.kind));
    if (s.kind == ModelKind::Transformer && s.transformer.bfpf_enabled) s.name += "_bfpf";
  }
  if (s.name.empty()) throw Error("config: empty model name");
  return s;
}

}  // namespace nowcast::json_io
