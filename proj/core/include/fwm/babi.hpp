// Concatenated-story question answering pipeline: parse raw task files into
// stories, concatenate them into an endless token stream with per-token
// answer/task annotations, and cut the stream into truncated-BPTT batches.
//
// Answers are inlined directly after the question mark, so a next-token
// model answers by prediction. QA mode masks the loss to answer positions;
// LM mode trains on every non-padding position.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "fwm/model.hpp"
#include "fwm/rng.hpp"

namespace fwm {

inline constexpr const char* kEosToken = "<eos>";
inline constexpr const char* kPadToken = "<pad>";

struct Story {
  std::vector<std::string> tokens;    // lowercased; "?" "." "!" standalone
  std::vector<uint8_t> answer_flags;  // true on inlined answer tokens
  int task_id = 0;
};

class Vocab {
 public:
  int add(const std::string& w);        // idempotent
  int find(const std::string& w) const; // -1 if absent
  int at(const std::string& w) const;   // throws if absent
  const std::string& word(int id) const { return words_[static_cast<size_t>(id)]; }
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// One split with story boundaries retained so epochs can reshuffle stories.
struct TokenizedSplit {
  std::vector<int> tokens;
  std::vector<uint8_t> answer_mask;
  std::vector<uint8_t> task_ids;
  std::vector<uint64_t> story_offsets;  // story i spans [offsets[i], offsets[i+1])
  uint64_t question_count = 0;

  size_t story_count() const {
    return story_offsets.empty() ? 0 : story_offsets.size() - 1;
  }
};

struct Dataset {
  uint64_t build_seed = 0;
  Vocab vocab;
  int eos_id = -1;
  int pad_id = -1;
  TokenizedSplit train, valid, test;
};

// --- raw task files -------------------------------------------------------

// Parses one task file: sentence indices stripped, supporting-fact columns
// dropped, answers inlined after "?" (list answers comma-split, every answer
// token flagged), an end-of-story token appended per story.
// Throws std::runtime_error with file/line context on malformed input.
std::vector<Story> preprocess_babi_file(const std::string& path, int task_id);

struct BabiCorpus {
  std::vector<Story> train, valid, test;
};

// Scans a directory in the standard task layout (qa{N}_..._{train,valid,test}.txt).
BabiCorpus load_babi_dir(const std::string& dir);

// --- dataset construction -------------------------------------------------

// Vocabulary comes from the training split (plus the special tokens); an
// out-of-vocabulary token in valid/test is an error. The valid/test story
// order is fixed once using `seed` so every model sees the same evaluation
// sequence; the training split is reshuffled per epoch at run time.
Dataset build_dataset(const BabiCorpus& corpus, uint64_t seed);

struct SplitStats {
  uint64_t tokens = 0, stories = 0, questions = 0;
};
SplitStats split_stats(const TokenizedSplit& split);

// --- streaming and batching -----------------------------------------------

struct TokenStream {
  std::vector<int> tokens;
  std::vector<uint8_t> answer_mask;
  std::vector<uint8_t> task_ids;
};

// Concatenates the split's stories. With an rng the story order is shuffled
// (training epochs); without it the stored order is kept (valid/test).
TokenStream concat_stream(const TokenizedSplit& split, Rng* shuffle_rng);

enum class LossMode { kQa, kLm };

struct Batch {
  int b = 0, l = 0;
  std::vector<int> inputs;        // row-major [lane][t]
  std::vector<int> targets;
  std::vector<uint8_t> loss_mask;
  int input(int lane, int t) const { return inputs[static_cast<size_t>(lane) * l + t]; }
  int target(int lane, int t) const { return targets[static_cast<size_t>(lane) * l + t]; }
  bool masked(int lane, int t) const { return loss_mask[static_cast<size_t>(lane) * l + t] != 0; }
  size_t mask_count() const;
};

// Splits the stream into `batch` contiguous lanes and walks them in windows
// of length `window`. Targets are the stream shifted by one; the epoch tail
// is padded and padding is always loss-masked.
class BatchIterator {
 public:
  BatchIterator(const TokenStream& stream, int batch, int window, LossMode mode, int pad_id);
  bool next(Batch* out);

 private:
  const TokenStream& stream_;
  int b_, l_;
  LossMode mode_;
  int pad_id_;
  uint64_t lane_len_;
  uint64_t cursor_ = 0;  // position within the lane
};

// --- evaluation -----------------------------------------------------------

struct TaskStat {
  uint64_t count = 0;
  uint64_t correct = 0;
  double ce_sum = 0.0;
  double accuracy() const { return count ? static_cast<double>(correct) / count : 0.0; }
  double perplexity() const { return count ? std::exp(ce_sum / count) : 1.0; }
};

struct EvalResult {
  TaskStat overall;
  std::map<int, TaskStat> per_task;
};

// Deterministic single-lane pass; accuracy and perplexity are measured on
// answer positions only.
EvalResult evaluate_qa(const SeqModel& model, const TokenStream& stream);

// Same bookkeeping over an arbitrary stateful predictor (input token ->
// next-token logits); lets tests plug in analytic models.
EvalResult evaluate_qa_fn(const std::function<Vec(int)>& step, const TokenStream& stream);

}  // namespace fwm
