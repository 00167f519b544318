#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "json_io.hpp"
#include "nowcast/model_spec.hpp"

namespace nowcast {

namespace {
constexpr std::array<char, 4> kMagic = {'N', 'W', 'B', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::array<std::string_view, 5> kKindNames = {"zero", "persistence", "moving_average", "linear",
                                                         "transformer"};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), 4);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 8)) throw Error("corrupt checkpoint: truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw Error("corrupt checkpoint: truncated");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace

std::string_view to_string(ModelKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

ModelKind model_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == s) return static_cast<ModelKind>(i);
  throw Error("unknown model type: " + std::string(s));
}

std::vector<ModelSpec> default_model_specs() {
  std::vector<ModelSpec> specs;
  specs.push_back({"zero", ModelKind::Zero, 6, {}});
  specs.push_back({"persistence", ModelKind::Persistence, 6, {}});
  specs.push_back({"moving_average", ModelKind::MovingAverage, 6, {}});
  specs.push_back({"linear", ModelKind::Linear, 6, {}});
  specs.push_back({"transformer", ModelKind::Transformer, 6, {}});
  ModelSpec bfpf_spec{"transformer_bfpf", ModelKind::Transformer, 6, {}};
  bfpf_spec.transformer.bfpf_enabled = true;
  specs.push_back(bfpf_spec);
  return specs;
}

std::unique_ptr<Forecaster> make_forecaster(const ModelSpec& spec, const WindowConfig& window,
                                            const Normalizer& norm) {
  switch (spec.kind) {
    case ModelKind::Zero: return std::make_unique<ZeroForecaster>(window);
    case ModelKind::Persistence: return std::make_unique<PersistenceForecaster>(window);
    case ModelKind::MovingAverage: return std::make_unique<MovingAverageForecaster>(window, spec.ma_window);
    case ModelKind::Linear: return std::make_unique<LinearForecaster>(window, norm);
    case ModelKind::Transformer: return std::make_unique<TransformerForecaster>(window, norm, spec.transformer);
  }
  throw Error("unknown model kind");
}

void save_checkpoint(std::ostream& out, const ModelSpec& spec, const Forecaster& model) {
  using json_io::json;
  json cfg;
  cfg["model"] = json_io::to_json(spec);
  cfg["window"] = json_io::to_json(model.window());
  const auto* trainable = dynamic_cast<const TrainableForecaster*>(&model);
  json params = json::array();
  if (trainable) {
    json mean = json::array();
    json sd = json::array();
    for (std::size_t v = 0; v < kNumVariables; ++v) {
      mean.push_back(trainable->normalizer().mean(v));
      sd.push_back(trainable->normalizer().std(v));
    }
    cfg["normalizer"] = json{{"mean", mean}, {"std", sd}};
    for (const auto& p : trainable->parameters())
      params.push_back(json{{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  cfg["parameters"] = params;
  const std::string block = cfg.dump();

  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kVersion);
  put_u64(out, block.size());
  out.write(block.data(), static_cast<std::streamsize>(block.size()));
  if (trainable) {
    for (const auto& p : trainable->parameters()) {
      for (Eigen::Index r = 0; r < p.value.rows(); ++r)
        for (Eigen::Index c = 0; c < p.value.cols(); ++c) put_u64(out, std::bit_cast<std::uint64_t>(p.value(r, c)));
    }
  }
  if (!out) throw Error("checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& path, const ModelSpec& spec, const Forecaster& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  save_checkpoint(out, spec, model);
}

LoadedModel load_checkpoint(std::istream& in) {
  using json_io::json;
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kMagic) throw Error("corrupt checkpoint: bad magic");
  if (get_u32(in) != kVersion) throw Error("corrupt checkpoint: unsupported version");
  const std::uint64_t len = get_u64(in);
  if (len > (1u << 26)) throw Error("corrupt checkpoint: config block too large");
  std::string block(len, '\0');
  if (!in.read(block.data(), static_cast<std::streamsize>(len))) throw Error("corrupt checkpoint: truncated");

  json cfg;
  try {
    cfg = json::parse(block);
  } catch (const json::exception& e) {
    throw Error(std::string("corrupt checkpoint: ") + e.what());
  }
  LoadedModel loaded;
  loaded.spec = json_io::model_spec_from_json(cfg.at("model"));
  const WindowConfig window = json_io::window_from_json(cfg.at("window"));
  Normalizer norm;
  if (cfg.contains("normalizer")) {
    std::array<double, kNumVariables> mean{};
    std::array<double, kNumVariables> sd{};
    for (std::size_t v = 0; v < kNumVariables; ++v) {
      mean[v] = cfg["normalizer"]["mean"].at(v).get<double>();
      sd[v] = cfg["normalizer"]["std"].at(v).get<double>();
    }
    norm = Normalizer::from_stats(mean, sd);
  }
  loaded.model = make_forecaster(loaded.spec, window, norm);
  if (auto* trainable = dynamic_cast<TrainableForecaster*>(loaded.model.get())) {
    auto& params = trainable->parameters();
    const json& declared = cfg.at("parameters");
    if (declared.size() != params.size()) throw Error("corrupt checkpoint: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (declared[i].at("name").get<std::string>() != params[i].name ||
          declared[i].at("rows").get<Eigen::Index>() != params[i].value.rows() ||
          declared[i].at("cols").get<Eigen::Index>() != params[i].value.cols())
        throw Error("corrupt checkpoint: parameter layout mismatch at " + params[i].name);
      for (Eigen::Index r = 0; r < params[i].value.rows(); ++r)
        for (Eigen::Index c = 0; c < params[i].value.cols(); ++c)
          params[i].value(r, c) = std::bit_cast<double>(get_u64(in));
    }
  }
  return loaded;
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  return load_checkpoint(in);
}

}  // namespace nowcast
