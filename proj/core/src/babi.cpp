#include "fwm/babi.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

namespace fwm {

int Vocab::add(const std::string& w) {
  auto it = index_.find(w);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(words_.size());
  words_.push_back(w);
  index_.emplace(w, id);
  return id;
}

int Vocab::find(const std::string& w) const {
  auto it = index_.find(w);
  return it == index_.end() ? -1 : it->second;
}

int Vocab::at(const std::string& w) const {
  const int id = find(w);
  FWM_CHECK(id >= 0, "vocab: unknown token '" + w + "'");
  return id;
}

namespace {

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_split_punct(char c) { return c == '.' || c == '?' || c == '!'; }

// Lowercase, whitespace-split, trailing . ? ! peeled into standalone tokens.
void tokenize_into(const std::string& text, std::vector<std::string>* out) {
  std::istringstream ss(text);
  std::string w;
  while (ss >> w) {
    w = lowercase(w);
    std::vector<std::string> tail;
    while (!w.empty() && is_split_punct(w.back())) {
      tail.emplace_back(1, w.back());
      w.pop_back();
    }
    if (!w.empty()) out->push_back(w);
    for (auto it = tail.rbegin(); it != tail.rend(); ++it) out->push_back(*it);
  }
}

std::vector<std::string> split_answer(const std::string& answer) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : answer) {
    if (c == ',') {
      if (!cur.empty()) parts.push_back(lowercase(cur));
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(lowercase(cur));
  return parts;
}

}  // namespace

std::vector<Story> preprocess_babi_file(const std::string& path, int task_id) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::vector<Story> stories;
  Story current;
  current.task_id = task_id;
  int prev_index = 0;
  int line_no = 0;

  auto flush = [&]() {
    if (!current.tokens.empty()) {
      current.tokens.push_back(kEosToken);
      current.answer_flags.push_back(0);
      stories.push_back(std::move(current));
      current = Story{};
      current.task_id = task_id;
    }
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    size_t sp = line.find(' ');
    if (sp == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": missing sentence index");
    int index = 0;
    try {
      index = std::stoi(line.substr(0, sp));
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad sentence index");
    }
    if (index <= prev_index) flush();
    prev_index = index;

    const std::string rest = line.substr(sp + 1);
    const size_t tab = rest.find('\t');
    if (tab == std::string::npos) {
      tokenize_into(rest, &current.tokens);
      current.answer_flags.resize(current.tokens.size(), 0);
    } else {
      // Question line: "question ?\tanswer\tsupporting-facts". The answer is
      // inlined after the question mark; supporting facts are dropped.
      tokenize_into(rest.substr(0, tab), &current.tokens);
      current.answer_flags.resize(current.tokens.size(), 0);
      if (current.tokens.empty() || current.tokens.back() != "?")
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": question line does not end with '?'");
      std::string answer = rest.substr(tab + 1);
      const size_t tab2 = answer.find('\t');
      if (tab2 != std::string::npos) answer = answer.substr(0, tab2);
      const auto parts = split_answer(answer);
      if (parts.empty())
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty answer");
      for (const auto& p : parts) {
        current.tokens.push_back(p);
        current.answer_flags.push_back(1);
      }
    }
  }
  flush();
  return stories;
}

BabiCorpus load_babi_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  FWM_CHECK(fs::is_directory(dir), "not a directory: " + dir);
  const std::regex name_re(R"(qa(\d+)(?:_.*)?_(train|valid|test)\.txt)");

  struct FileRef {
    int task;
    std::string split;
    fs::path path;
  };
  std::vector<FileRef> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::smatch m;
    const std::string name = e.path().filename().string();
    if (std::regex_match(name, m, name_re))
      files.push_back({std::stoi(m[1].str()), m[2].str(), e.path()});
  }
  FWM_CHECK(!files.empty(), "no task files (qa*_*.txt) found in " + dir);
  std::sort(files.begin(), files.end(), [](const FileRef& a, const FileRef& b) {
    return std::tie(a.task, a.split) < std::tie(b.task, b.split);
  });

  BabiCorpus corpus;
  for (const auto& f : files) {
    auto stories = preprocess_babi_file(f.path.string(), f.task);
    auto* dst = f.split == "train" ? &corpus.train
              : f.split == "valid" ? &corpus.valid
                                   : &corpus.test;
    for (auto& s : stories) dst->push_back(std::move(s));
  }
  return corpus;
}

namespace {

TokenizedSplit tokenize_split(const std::vector<Story>& stories,
                              const std::vector<size_t>& order, Vocab& vocab,
                              bool grow_vocab) {
  TokenizedSplit out;
  out.story_offsets.push_back(0);
  for (size_t idx : order) {
    const Story& s = stories[idx];
    FWM_CHECK(s.task_id >= 0 && s.task_id <= 255, "task id out of range");
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      const int id = grow_vocab ? vocab.add(s.tokens[i]) : vocab.at(s.tokens[i]);
      out.tokens.push_back(id);
      out.answer_mask.push_back(s.answer_flags[i]);
      out.task_ids.push_back(static_cast<uint8_t>(s.task_id));
      if (s.tokens[i] == "?") ++out.question_count;
    }
    out.story_offsets.push_back(out.tokens.size());
  }
  return out;
}

std::vector<size_t> identity_order(size_t n) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

std::vector<size_t> shuffled_order(size_t n, Rng& rng) {
  auto order = identity_order(n);
  // Fisher-Yates with our own draws so the order is stable across platforms.
  for (size_t i = n; i > 1; --i) {
    const size_t j = rng.uniform(i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace

Dataset build_dataset(const BabiCorpus& corpus, uint64_t seed) {
  FWM_CHECK(!corpus.train.empty(), "dataset: empty training split");
  Dataset ds;
  ds.build_seed = seed;
  ds.pad_id = ds.vocab.add(kPadToken);
  ds.eos_id = ds.vocab.add(kEosToken);

  ds.train = tokenize_split(corpus.train, identity_order(corpus.train.size()), ds.vocab,
                            /*grow_vocab=*/true);
  Rng valid_rng = Rng::stream(seed, 10);
  Rng test_rng = Rng::stream(seed, 11);
  ds.valid = tokenize_split(corpus.valid, shuffled_order(corpus.valid.size(), valid_rng),
                            ds.vocab, /*grow_vocab=*/false);
  ds.test = tokenize_split(corpus.test, shuffled_order(corpus.test.size(), test_rng),
                           ds.vocab, /*grow_vocab=*/false);
  return ds;
}

SplitStats split_stats(const TokenizedSplit& split) {
  return SplitStats{split.tokens.size(), split.story_count(), split.question_count};
}

TokenStream concat_stream(const TokenizedSplit& split, Rng* shuffle_rng) {
  TokenStream out;
  out.tokens.reserve(split.tokens.size());
  out.answer_mask.reserve(split.tokens.size());
  out.task_ids.reserve(split.tokens.size());
  const auto order = shuffle_rng ? shuffled_order(split.story_count(), *shuffle_rng)
                                 : identity_order(split.story_count());
  for (size_t idx : order) {
    const uint64_t lo = split.story_offsets[idx];
    const uint64_t hi = split.story_offsets[idx + 1];
    for (uint64_t i = lo; i < hi; ++i) {
      out.tokens.push_back(split.tokens[static_cast<size_t>(i)]);
      out.answer_mask.push_back(split.answer_mask[static_cast<size_t>(i)]);
      out.task_ids.push_back(split.task_ids[static_cast<size_t>(i)]);
    }
  }
  return out;
}

size_t Batch::mask_count() const {
  size_t n = 0;
  for (uint8_t m : loss_mask) n += m;
  return n;
}

BatchIterator::BatchIterator(const TokenStream& stream, int batch, int window, LossMode mode,
                             int pad_id)
    : stream_(stream), b_(batch), l_(window), mode_(mode), pad_id_(pad_id) {
  FWM_CHECK(batch > 0 && window > 0, "batch iterator: bad shape");
  const uint64_t n = stream.tokens.size();
  FWM_CHECK(n >= static_cast<uint64_t>(batch) * window, "stream shorter than one window");
  lane_len_ = (n + batch - 1) / static_cast<uint64_t>(batch);
}

bool BatchIterator::next(Batch* out) {
  if (cursor_ >= lane_len_) return false;
  const uint64_t n = stream_.tokens.size();
  out->b = b_;
  out->l = l_;
  const size_t cells = static_cast<size_t>(b_) * l_;
  out->inputs.assign(cells, pad_id_);
  out->targets.assign(cells, pad_id_);
  out->loss_mask.assign(cells, 0);
  for (int lane = 0; lane < b_; ++lane) {
    const uint64_t base = static_cast<uint64_t>(lane) * lane_len_ + cursor_;
    for (int t = 0; t < l_; ++t) {
      const uint64_t pos = base + t;
      if (cursor_ + t >= lane_len_ || pos >= n) break;
      const size_t cell = static_cast<size_t>(lane) * l_ + t;
      out->inputs[cell] = stream_.tokens[static_cast<size_t>(pos)];
      if (pos + 1 < n) {
        out->targets[cell] = stream_.tokens[static_cast<size_t>(pos + 1)];
        const bool ans = stream_.answer_mask[static_cast<size_t>(pos + 1)] != 0;
        out->loss_mask[cell] = mode_ == LossMode::kQa ? (ans ? 1 : 0) : 1;
      }
    }
  }
  cursor_ += static_cast<uint64_t>(l_);
  return true;
}

EvalResult evaluate_qa_fn(const std::function<Vec(int)>& step, const TokenStream& stream) {
  EvalResult res;
  const size_t n = stream.tokens.size();
  for (size_t t = 0; t + 1 < n; ++t) {
    const Vec logits = step(stream.tokens[t]);
    if (!stream.answer_mask[t + 1]) continue;
    const int target = stream.tokens[t + 1];
    const Vec probs = softmax(logits);
    int argmax = 0;
    for (int i = 1; i < probs.size(); ++i)
      if (probs[i] > probs[argmax]) argmax = i;
    const double ce = -std::log(std::max(probs[target], 1e-300));
    const int task = stream.task_ids[t + 1];
    for (TaskStat* stat : {&res.overall, &res.per_task[task]}) {
      stat->count += 1;
      stat->correct += argmax == target ? 1 : 0;
      stat->ce_sum += ce;
    }
  }
  return res;
}

EvalResult evaluate_qa(const SeqModel& model, const TokenStream& stream) {
  CoreState state = model.initial_state();
  return evaluate_qa_fn(
      [&](int token) { return model.step_logits(state, token); }, stream);
}

}  // namespace fwm
