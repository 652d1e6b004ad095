#include "fwm/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace fwm {

namespace {

constexpr char kMagic[4] = {'F', 'W', 'M', 'C'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const uint32_t n = read_pod<uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

void write_doubles(std::ostream& out, const double* d, size_t n) {
  out.write(reinterpret_cast<const char*>(d), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::istream& in, double* d, size_t n) {
  in.read(reinterpret_cast<char*>(d), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated array");
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& config_json,
                     const ParamStore& params, const Adam* adam) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, 4);
  write_pod<uint32_t>(out, kVersion);
  write_string(out, config_json);
  write_pod<uint32_t>(out, static_cast<uint32_t>(params.count()));
  for (int i = 0; i < params.count(); ++i) {
    const auto& e = params.entry(i);
    write_string(out, e.name);
    write_pod<uint32_t>(out, static_cast<uint32_t>(e.value.rows()));
    write_pod<uint32_t>(out, static_cast<uint32_t>(e.value.cols()));
    write_doubles(out, e.value.data(), e.value.size());
  }
  write_pod<uint8_t>(out, adam ? 1 : 0);
  if (adam) {
    write_pod<int64_t>(out, adam->step_count());
    const auto& m = const_cast<Adam*>(adam)->m();
    const auto& v = const_cast<Adam*>(adam)->v();
    for (int i = 0; i < params.count(); ++i) {
      write_doubles(out, m[static_cast<size_t>(i)].data(), m[static_cast<size_t>(i)].size());
      write_doubles(out, v[static_cast<size_t>(i)].data(), v[static_cast<size_t>(i)].size());
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  const uint32_t version = read_pod<uint32_t>(in);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  CheckpointData ckpt;
  ckpt.config_json = read_string(in);
  const uint32_t count = read_pod<uint32_t>(in);
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = read_string(in);
    const uint32_t rows = read_pod<uint32_t>(in);
    const uint32_t cols = read_pod<uint32_t>(in);
    Mat m(static_cast<int>(rows), static_cast<int>(cols));
    read_doubles(in, m.data(), m.size());
    ckpt.params.emplace_back(name, std::move(m));
  }
  const uint8_t has_opt = read_pod<uint8_t>(in);
  if (has_opt) {
    ckpt.has_optimizer = true;
    ckpt.adam_step = read_pod<int64_t>(in);
    for (uint32_t i = 0; i < count; ++i) {
      const size_t n = ckpt.params[i].second.size();
      std::vector<double> m(n), v(n);
      read_doubles(in, m.data(), n);
      read_doubles(in, v.data(), n);
      ckpt.adam_m.push_back(std::move(m));
      ckpt.adam_v.push_back(std::move(v));
    }
  }
  return ckpt;
}

void apply_params(const CheckpointData& ckpt, ParamStore* params) {
  FWM_CHECK(static_cast<int>(ckpt.params.size()) == params->count(),
            "checkpoint: parameter count mismatch");
  for (const auto& [name, mat] : ckpt.params) {
    const int id = params->find(name);
    FWM_CHECK(id >= 0, "checkpoint: unknown parameter " + name);
    Mat& dst = params->entry(id).value;
    FWM_CHECK(dst.rows() == mat.rows() && dst.cols() == mat.cols(),
              "checkpoint: shape mismatch for " + name);
    std::copy(mat.data(), mat.data() + mat.size(), dst.data());
  }
}

void apply_optimizer(const CheckpointData& ckpt, const ParamStore& params, Adam* adam) {
  FWM_CHECK(ckpt.has_optimizer, "checkpoint: no optimizer state stored");
  adam->set_step_count(ckpt.adam_step);
  for (size_t i = 0; i < ckpt.params.size(); ++i) {
    const int id = params.find(ckpt.params[i].first);
    FWM_CHECK(id >= 0, "checkpoint: unknown parameter " + ckpt.params[i].first);
    adam->m()[static_cast<size_t>(id)] = ckpt.adam_m[i];
    adam->v()[static_cast<size_t>(id)] = ckpt.adam_v[i];
  }
}

namespace {

const char* key_mode_name(KeyMode m) { return m == KeyMode::kTensor ? "tensor" : "concat"; }
KeyMode key_mode_from(const std::string& s) {
  FWM_CHECK(s == "tensor" || s == "concat", "bad key_mode: " + s);
  return s == "tensor" ? KeyMode::kTensor : KeyMode::kConcat;
}
const char* mode_name(ModelMode m) { return m == ModelMode::kFwm ? "fwm" : "lstm-only"; }
ModelMode mode_from(const std::string& s) {
  FWM_CHECK(s == "fwm" || s == "lstm-only", "bad mode: " + s);
  return s == "fwm" ? ModelMode::kFwm : ModelMode::kLstmOnly;
}

}  // namespace

std::string seq_config_to_json(const SeqModelConfig& cfg) {
  nlohmann::json j;
  j["kind"] = "seq";
  j["vocab"] = cfg.vocab;
  j["d_e"] = cfg.d_e;
  j["d_lstm"] = cfg.d_lstm;
  j["d_fwm"] = cfg.d_fwm;
  j["n_r"] = cfg.n_r;
  j["mode"] = mode_name(cfg.mode);
  j["key_mode"] = key_mode_name(cfg.key_mode);
  return j.dump();
}

SeqModelConfig seq_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  FWM_CHECK(j.at("kind").get<std::string>() == "seq", "not a seq model checkpoint");
  SeqModelConfig cfg;
  cfg.vocab = j.at("vocab").get<int>();
  cfg.d_e = j.at("d_e").get<int>();
  cfg.d_lstm = j.at("d_lstm").get<int>();
  cfg.d_fwm = j.at("d_fwm").get<int>();
  cfg.n_r = j.at("n_r").get<int>();
  cfg.mode = mode_from(j.at("mode").get<std::string>());
  cfg.key_mode = key_mode_from(j.at("key_mode").get<std::string>());
  return cfg;
}

std::string agent_config_to_json(const AgentModelConfig& cfg) {
  nlohmann::json j;
  j["kind"] = "agent";
  j["obs_dim"] = cfg.obs_dim;
  j["n_actions"] = cfg.n_actions;
  j["d_lstm"] = cfg.d_lstm;
  j["d_fwm"] = cfg.d_fwm;
  j["n_r"] = cfg.n_r;
  j["mode"] = mode_name(cfg.mode);
  j["key_mode"] = key_mode_name(cfg.key_mode);
  return j.dump();
}

AgentModelConfig agent_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  FWM_CHECK(j.at("kind").get<std::string>() == "agent", "not an agent model checkpoint");
  AgentModelConfig cfg;
  cfg.obs_dim = j.at("obs_dim").get<int>();
  cfg.n_actions = j.at("n_actions").get<int>();
  cfg.d_lstm = j.at("d_lstm").get<int>();
  cfg.d_fwm = j.at("d_fwm").get<int>();
  cfg.n_r = j.at("n_r").get<int>();
  cfg.mode = mode_from(j.at("mode").get<std::string>());
  cfg.key_mode = key_mode_from(j.at("key_mode").get<std::string>());
  return cfg;
}

std::string checkpoint_kind(const std::string& config_json) {
  return nlohmann::json::parse(config_json).at("kind").get<std::string>();
}

}  // namespace fwm
