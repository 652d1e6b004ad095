#include "fwm/dataset_io.hpp"

#include <cstring>
#include <fstream>

namespace fwm {

namespace {

constexpr char kMagic[4] = {'F', 'W', 'M', 'D'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("dataset: truncated file");
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
  if (!in) throw std::runtime_error("dataset: truncated string");
  return s;
}

void write_split(std::ostream& out, const TokenizedSplit& s) {
  write_pod<uint64_t>(out, s.tokens.size());
  write_pod<uint64_t>(out, s.story_offsets.size());
  write_pod<uint64_t>(out, s.question_count);
  for (int t : s.tokens) write_pod<uint32_t>(out, static_cast<uint32_t>(t));
  out.write(reinterpret_cast<const char*>(s.answer_mask.data()),
            static_cast<std::streamsize>(s.answer_mask.size()));
  out.write(reinterpret_cast<const char*>(s.task_ids.data()),
            static_cast<std::streamsize>(s.task_ids.size()));
  for (uint64_t o : s.story_offsets) write_pod<uint64_t>(out, o);
}

TokenizedSplit read_split(std::istream& in) {
  TokenizedSplit s;
  const uint64_t n_tokens = read_pod<uint64_t>(in);
  const uint64_t n_offsets = read_pod<uint64_t>(in);
  s.question_count = read_pod<uint64_t>(in);
  s.tokens.resize(n_tokens);
  for (auto& t : s.tokens) t = static_cast<int>(read_pod<uint32_t>(in));
  s.answer_mask.resize(n_tokens);
  in.read(reinterpret_cast<char*>(s.answer_mask.data()), static_cast<std::streamsize>(n_tokens));
  s.task_ids.resize(n_tokens);
  in.read(reinterpret_cast<char*>(s.task_ids.data()), static_cast<std::streamsize>(n_tokens));
  if (!in) throw std::runtime_error("dataset: truncated split");
  s.story_offsets.resize(n_offsets);
  for (auto& o : s.story_offsets) o = read_pod<uint64_t>(in);
  return s;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, 4);
  write_pod<uint32_t>(out, kVersion);
  write_pod<uint64_t>(out, ds.build_seed);
  write_pod<uint32_t>(out, static_cast<uint32_t>(ds.vocab.size()));
  for (const auto& w : ds.vocab.words()) write_string(out, w);
  write_pod<int32_t>(out, ds.eos_id);
  write_pod<int32_t>(out, ds.pad_id);
  write_split(out, ds.train);
  write_split(out, ds.valid);
  write_split(out, ds.test);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a dataset file: " + path);
  const uint32_t version = read_pod<uint32_t>(in);
  if (version != kVersion)
    throw std::runtime_error("unsupported dataset version " + std::to_string(version));
  Dataset ds;
  ds.build_seed = read_pod<uint64_t>(in);
  const uint32_t vocab_size = read_pod<uint32_t>(in);
  for (uint32_t i = 0; i < vocab_size; ++i) ds.vocab.add(read_string(in));
  ds.eos_id = read_pod<int32_t>(in);
  ds.pad_id = read_pod<int32_t>(in);
  ds.train = read_split(in);
  ds.valid = read_split(in);
  ds.test = read_split(in);
  return ds;
}

}  // namespace fwm
