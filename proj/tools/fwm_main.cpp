// Command-line entry points: dataset preparation, QA/LM and RL training,
// evaluation, gradient verification, and alignment export.
//
// Exit codes: 0 success, 1 usage error, 2 verification failure,
// 3 numerical abort.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fwm/babi.hpp"
#include "fwm/checkpoint.hpp"
#include "fwm/config.hpp"
#include "fwm/dataset_io.hpp"
#include "fwm/gradcheck.hpp"
#include "fwm/graph_env.hpp"
#include "fwm/synth.hpp"
#include "fwm/train_qa.hpp"
#include "fwm/train_rl.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "fwm 0.1.0";

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  uint64_t seed = 0;
  bool seed_given = false;
};

fwm::KvConfig resolve_config(const CommonArgs& args) {
  fwm::KvConfig cfg;
  if (!args.config_path.empty()) cfg = fwm::KvConfig::load(args.config_path);
  for (const auto& o : args.overrides) cfg.set(o);
  if (args.seed_given) cfg.set("seed", std::to_string(args.seed));
  cfg.set("version", kVersion);
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "key = value configuration file");
  cmd->add_option("--set", args->overrides, "override a config key (key=value)")->take_all();
  cmd->add_option("--seed", args->seed, "run seed")->each([args](const std::string&) {
    args->seed_given = true;
  });
}

void write_resolved(const fwm::KvConfig& cfg, const fs::path& path) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  cfg.save(path.string());
}

fwm::SynthConfig synth_config_from(const fwm::KvConfig& cfg) {
  fwm::SynthConfig s;
  s.n_entities = static_cast<int>(cfg.get_int("synth_entities", s.n_entities));
  s.n_locations = static_cast<int>(cfg.get_int("synth_locations", s.n_locations));
  s.n_types = static_cast<int>(cfg.get_int("synth_types", s.n_types));
  s.train_stories = static_cast<int>(cfg.get_int("synth_train_stories", s.train_stories));
  s.valid_stories = static_cast<int>(cfg.get_int("synth_valid_stories", s.valid_stories));
  s.test_stories = static_cast<int>(cfg.get_int("synth_test_stories", s.test_stories));
  s.entities_per_story =
      static_cast<int>(cfg.get_int("synth_entities_per_story", s.entities_per_story));
  s.chains_per_story = static_cast<int>(cfg.get_int("synth_chains_per_story", s.chains_per_story));
  s.move_again_prob = cfg.get_double("synth_move_again_prob", s.move_again_prob);
  s.holdout_fraction = cfg.get_double("synth_holdout_fraction", s.holdout_fraction);
  return s;
}

fwm::SeqModelConfig seq_config_from(const fwm::KvConfig& cfg, int vocab) {
  fwm::SeqModelConfig m;
  m.vocab = vocab;
  m.d_e = static_cast<int>(cfg.get_int("d_e", 256));
  m.d_lstm = static_cast<int>(cfg.get_int("d_lstm", 256));
  m.d_fwm = static_cast<int>(cfg.get_int("d_fwm", 32));
  m.n_r = static_cast<int>(cfg.get_int("n_r", 3));
  m.mode = cfg.get_string("mode", "fwm") == "lstm-only" ? fwm::ModelMode::kLstmOnly
                                                        : fwm::ModelMode::kFwm;
  m.key_mode = cfg.get_string("key_mode", "tensor") == "concat" ? fwm::KeyMode::kConcat
                                                                : fwm::KeyMode::kTensor;
  return m;
}

void print_split_stats(const char* name, const fwm::SplitStats& s) {
  std::cout << std::left << std::setw(7) << name << " stories " << std::setw(9) << s.stories
            << " questions " << std::setw(9) << s.questions << " tokens " << s.tokens << "\n";
}

int cmd_prep_data(const CommonArgs& common, const std::string& babi_dir, bool synthetic,
                  const std::string& out) {
  fwm::KvConfig cfg = resolve_config(common);
  if (babi_dir.empty() && !synthetic)
    throw std::invalid_argument("prep-data: pass --babi-dir DIR or --synthetic");
  const uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 0));

  fwm::BabiCorpus corpus;
  if (!babi_dir.empty()) {
    cfg.set("source", "babi:" + babi_dir);
    corpus = fwm::load_babi_dir(babi_dir);
  } else {
    cfg.set("source", "synthetic");
    corpus = fwm::synth_stories(seed, synth_config_from(cfg));
  }
  const fwm::Dataset ds = fwm::build_dataset(corpus, seed);
  fwm::save_dataset(ds, out);
  write_resolved(cfg, out + ".config");

  std::cout << "vocabulary " << ds.vocab.size() << " tokens\n";
  print_split_stats("train", fwm::split_stats(ds.train));
  print_split_stats("valid", fwm::split_stats(ds.valid));
  print_split_stats("test", fwm::split_stats(ds.test));
  return 0;
}

json eval_to_json(const fwm::EvalResult& res) {
  json per_task = json::object();
  for (const auto& [task, stat] : res.per_task)
    per_task[std::to_string(task)] = {{"count", stat.count},
                                      {"accuracy", stat.accuracy()},
                                      {"perplexity", stat.perplexity()}};
  return {{"questions", res.overall.count},
          {"accuracy", res.overall.accuracy()},
          {"perplexity", res.overall.perplexity()},
          {"per_task", per_task}};
}

int cmd_train_qa(const CommonArgs& common, const std::string& data, const std::string& out,
                 const std::string& resume, fwm::LossMode mode) {
  fwm::KvConfig cfg = resolve_config(common);
  cfg.set("loss_mode", mode == fwm::LossMode::kQa ? "qa" : "lm");
  const fwm::Dataset ds = fwm::load_dataset(data);
  const uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 0));

  const fwm::SeqModelConfig model_cfg = seq_config_from(cfg, ds.vocab.size());
  fwm::SeqModel model(model_cfg, seed);

  fwm::QaTrainConfig tc;
  tc.mode = mode;
  tc.batch = static_cast<int>(cfg.get_int("batch", 16));
  tc.window = static_cast<int>(cfg.get_int("window", 200));
  tc.steps = cfg.get_int("steps", 1000);
  tc.adam.lr = cfg.get_double("lr", 0.001);
  tc.adam.grad_clip = cfg.get_double("grad_clip", 1.0);
  tc.seed = seed;
  tc.eval_every = cfg.get_int("eval_every", 0);
  fwm::QaTrainer trainer(model, ds, tc);
  if (!resume.empty()) {
    const auto ckpt = fwm::load_checkpoint(resume);
    fwm::apply_params(ckpt, &model.params());
    if (ckpt.has_optimizer) fwm::apply_optimizer(ckpt, model.params(), &trainer.optimizer());
  }

  fs::create_directories(out);
  write_resolved(cfg, fs::path(out) / "config.resolved");
  std::ofstream metrics(fs::path(out) / "metrics.jsonl");
  const long long log_every = cfg.get_int("log_every", 1);
  const long long checkpoint_every = cfg.get_int("checkpoint_every", 0);
  const std::string ckpt_path = (fs::path(out) / "checkpoint.fwm").string();

  trainer.run(
      [&](const fwm::QaStepMetrics& m) {
        if (m.step % log_every == 0)
          metrics << json{{"type", "step"},
                          {"step", m.step},
                          {"epoch", m.epoch},
                          {"loss", m.loss},
                          {"masked_tokens", m.masked_tokens}}
                         .dump()
                  << "\n";
        if (checkpoint_every > 0 && m.step % checkpoint_every == 0)
          fwm::save_checkpoint(ckpt_path, fwm::seq_config_to_json(model_cfg), model.params(),
                               &trainer.optimizer());
      },
      [&](const fwm::QaEvalMetrics& m) {
        json j = eval_to_json(m.valid);
        j["type"] = "eval";
        j["step"] = m.step;
        metrics << j.dump() << "\n";
        metrics.flush();
        std::cout << "step " << m.step << " valid accuracy " << m.valid.overall.accuracy()
                  << " ppl " << m.valid.overall.perplexity() << "\n";
      });

  fwm::save_checkpoint(ckpt_path, fwm::seq_config_to_json(model_cfg), model.params(),
                       &trainer.optimizer());
  return 0;
}

int cmd_train_rl(const CommonArgs& common, const std::string& out, const std::string& resume) {
  fwm::KvConfig cfg = resolve_config(common);
  const uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 0));

  fwm::RlTrainConfig tc;
  tc.batch_agents = static_cast<int>(cfg.get_int("batch_agents", 600));
  tc.gamma = cfg.get_double("gamma", 0.9);
  tc.value_coef = cfg.get_double("value_coef", 0.1);
  tc.entropy_coef = cfg.get_double("entropy_coef", 0.03);
  tc.adam.lr = cfg.get_double("lr", 0.001);
  tc.adam.grad_clip = cfg.get_double("grad_clip", 1.0);
  tc.updates = cfg.get_int("updates", 5000);
  tc.seed = seed;
  tc.eval_every = cfg.get_int("eval_every", 0);
  tc.eval_episodes_per_graph = static_cast<int>(cfg.get_int("eval_episodes_per_graph", 1));
  tc.threads = static_cast<int>(cfg.get_int("threads", 1));
  tc.env.episode_len = static_cast<int>(cfg.get_int("episode_len", 30));

  const int n_actions = static_cast<int>(cfg.get_int("n_actions", 3));
  const int n_states = static_cast<int>(cfg.get_int("n_states", 5));
  const int n_train = static_cast<int>(cfg.get_int("train_graphs", 600));
  const int n_test = static_cast<int>(cfg.get_int("test_graphs", 600));

  fwm::Rng graph_rng = fwm::Rng::stream(seed, 500);
  fwm::RngDrawSource draws(graph_rng);
  std::vector<fwm::GraphSpec> train_graphs, test_graphs;
  for (int i = 0; i < n_train; ++i)
    train_graphs.push_back(fwm::sample_graph(draws, n_actions, n_states));
  for (int i = 0; i < n_test; ++i)
    test_graphs.push_back(fwm::sample_graph(draws, n_actions, n_states));

  fwm::AgentModelConfig model_cfg;
  model_cfg.obs_dim = fwm::observation_dim(train_graphs.front());
  model_cfg.n_actions = n_actions;
  model_cfg.d_lstm = static_cast<int>(cfg.get_int("d_lstm", 32));
  model_cfg.d_fwm = static_cast<int>(cfg.get_int("d_fwm", 16));
  model_cfg.n_r = static_cast<int>(cfg.get_int("n_r", 3));
  model_cfg.mode = cfg.get_string("mode", "fwm") == "lstm-only" ? fwm::ModelMode::kLstmOnly
                                                                : fwm::ModelMode::kFwm;
  fwm::AgentModel model(model_cfg, seed);

  fs::create_directories(out);
  write_resolved(cfg, fs::path(out) / "config.resolved");
  fwm::save_graphs(train_graphs, seed, (fs::path(out) / "train_graphs.json").string());
  fwm::save_graphs(test_graphs, seed, (fs::path(out) / "test_graphs.json").string());

  fwm::A2CTrainer trainer(model, std::move(train_graphs), std::move(test_graphs), tc);
  if (!resume.empty()) {
    const auto ckpt = fwm::load_checkpoint(resume);
    fwm::apply_params(ckpt, &model.params());
    if (ckpt.has_optimizer) fwm::apply_optimizer(ckpt, model.params(), &trainer.optimizer());
  }

  std::ofstream metrics(fs::path(out) / "metrics.jsonl");
  const long long log_every = cfg.get_int("log_every", 1);
  const std::string ckpt_path = (fs::path(out) / "checkpoint.fwm").string();
  const long long checkpoint_every = cfg.get_int("checkpoint_every", 0);

  trainer.run(
      [&](const fwm::RlUpdateMetrics& m) {
        if (m.update % log_every == 0)
          metrics << json{{"type", "update"},
                          {"update", m.update},
                          {"mean_reward", m.mean_reward},
                          {"loss", m.loss},
                          {"policy_loss", m.policy_loss},
                          {"value_loss", m.value_loss},
                          {"entropy", m.entropy}}
                         .dump()
                  << "\n";
        if (checkpoint_every > 0 && m.update % checkpoint_every == 0)
          fwm::save_checkpoint(ckpt_path, fwm::agent_config_to_json(model_cfg), model.params(),
                               &trainer.optimizer());
      },
      [&](const fwm::RlEvalMetrics& m) {
        metrics << json{{"type", "eval"},
                        {"update", m.update},
                        {"train_reward", m.train.mean},
                        {"train_stderr", m.train.stderr_},
                        {"test_reward", m.test.mean},
                        {"test_stderr", m.test.stderr_}}
                       .dump()
                << "\n";
        metrics.flush();
        std::cout << "update " << m.update << " train " << m.train.mean << " test " << m.test.mean
                  << "\n";
      });

  fwm::save_checkpoint(ckpt_path, fwm::agent_config_to_json(model_cfg), model.params(),
                       &trainer.optimizer());
  return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& checkpoint, const std::string& data,
             const std::string& graphs, const std::string& out) {
  fwm::KvConfig cfg = resolve_config(common);
  const auto ckpt = fwm::load_checkpoint(checkpoint);
  const std::string kind = fwm::checkpoint_kind(ckpt.config_json);
  fs::create_directories(out);
  write_resolved(cfg, fs::path(out) / "config.resolved");
  std::ofstream sink(fs::path(out) / "eval.jsonl");

  if (kind == "seq") {
    if (data.empty()) throw std::invalid_argument("eval: seq checkpoint needs --data");
    const fwm::Dataset ds = fwm::load_dataset(data);
    fwm::SeqModel model(fwm::seq_config_from_json(ckpt.config_json), 0);
    fwm::apply_params(ckpt, &model.params());
    const std::string split = cfg.get_string("split", "test");
    const fwm::TokenizedSplit* ts = split == "train"   ? &ds.train
                                    : split == "valid" ? &ds.valid
                                                       : &ds.test;
    const fwm::TokenStream stream = fwm::concat_stream(*ts, nullptr);
    const fwm::EvalResult res = fwm::evaluate_qa(model, stream);
    json j = eval_to_json(res);
    j["split"] = split;
    sink << j.dump() << "\n";
    std::cout << "split " << split << ": accuracy " << res.overall.accuracy() << " ppl "
              << res.overall.perplexity() << " over " << res.overall.count << " questions\n";
    for (const auto& [task, stat] : res.per_task)
      std::cout << "  task " << task << ": accuracy " << stat.accuracy() << " ppl "
                << stat.perplexity() << " (" << stat.count << ")\n";
  } else {
    if (graphs.empty()) throw std::invalid_argument("eval: agent checkpoint needs --graphs");
    uint64_t gseed = 0;
    const auto graph_set = fwm::load_graphs(graphs, &gseed);
    fwm::AgentModel model(fwm::agent_config_from_json(ckpt.config_json), 0);
    fwm::apply_params(ckpt, &model.params());
    fwm::EnvConfig env;
    env.episode_len = static_cast<int>(cfg.get_int("episode_len", 30));
    const int episodes = static_cast<int>(cfg.get_int("episodes_per_graph", 1));
    const uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 0));
    const bool greedy = cfg.get_bool("greedy", true);
    const fwm::RewardStat policy =
        fwm::evaluate_policy(model, graph_set, env, episodes, seed, greedy);
    const fwm::RewardStat oracle = fwm::oracle_reward(graph_set, env, episodes, seed + 1);
    const fwm::RewardStat random = fwm::random_reward(graph_set, env, episodes, seed + 2);
    sink << json{{"graphs", graph_set.size()},
                 {"policy_reward", policy.mean},
                 {"policy_stderr", policy.stderr_},
                 {"oracle_reward", oracle.mean},
                 {"random_reward", random.mean}}
                .dump()
         << "\n";
    std::cout << "policy " << policy.mean << " +- " << policy.stderr_ << " | oracle "
              << oracle.mean << " | random " << random.mean << "\n";
  }
  return 0;
}

int cmd_gradcheck(const CommonArgs& common) {
  fwm::KvConfig cfg = resolve_config(common);
  fwm::GradCheckConfig gc;
  gc.model.vocab = static_cast<int>(cfg.get_int("vocab", gc.model.vocab));
  gc.model.d_e = static_cast<int>(cfg.get_int("d_e", gc.model.d_e));
  gc.model.d_lstm = static_cast<int>(cfg.get_int("d_lstm", gc.model.d_lstm));
  gc.model.d_fwm = static_cast<int>(cfg.get_int("d_fwm", gc.model.d_fwm));
  gc.model.n_r = static_cast<int>(cfg.get_int("n_r", gc.model.n_r));
  gc.model.key_mode = cfg.get_string("key_mode", "tensor") == "concat" ? fwm::KeyMode::kConcat
                                                                       : fwm::KeyMode::kTensor;
  gc.seq_len = static_cast<int>(cfg.get_int("seq_len", gc.seq_len));
  gc.seed = static_cast<uint64_t>(cfg.get_int("seed", 0));
  gc.fd_step = cfg.get_double("fd_step", gc.fd_step);
  const double tol = cfg.get_double("tolerance", 1e-4);

  const fwm::GradCheckReport report = fwm::grad_check(gc);
  for (const auto& e : report.entries)
    std::cout << std::left << std::setw(16) << e.param << " max rel err " << std::scientific
              << e.max_rel_err << "\n";
  std::cout << "overall max rel err " << std::scientific << report.max_rel_err << " (tolerance "
            << std::defaultfloat << tol << ")\n";
  if (!report.passed(tol)) {
    std::cout << "FAIL\n";
    return 2;
  }
  std::cout << "PASS\n";
  return 0;
}

int cmd_export_alignment(const CommonArgs& common, const std::string& checkpoint,
                         const std::string& data, const std::string& out, int story_idx,
                         int position) {
  fwm::KvConfig cfg = resolve_config(common);
  const auto ckpt = fwm::load_checkpoint(checkpoint);
  if (fwm::checkpoint_kind(ckpt.config_json) != "seq")
    throw std::invalid_argument("export-alignment: needs a seq checkpoint");
  const fwm::SeqModelConfig model_cfg = fwm::seq_config_from_json(ckpt.config_json);
  if (model_cfg.mode != fwm::ModelMode::kFwm)
    throw std::invalid_argument("export-alignment: introspection requires the fwm path");
  fwm::SeqModel model(model_cfg, 0);
  fwm::apply_params(ckpt, &model.params());

  const fwm::Dataset ds = fwm::load_dataset(data);
  const std::string split = cfg.get_string("split", "test");
  const fwm::TokenizedSplit* ts = split == "train"   ? &ds.train
                                  : split == "valid" ? &ds.valid
                                                     : &ds.test;
  FWM_CHECK(story_idx >= 0 && static_cast<size_t>(story_idx) < ts->story_count(),
            "export-alignment: story index out of range");
  const uint64_t lo = ts->story_offsets[static_cast<size_t>(story_idx)];
  const uint64_t hi = ts->story_offsets[static_cast<size_t>(story_idx) + 1];
  std::vector<int> tokens(ts->tokens.begin() + static_cast<long>(lo),
                          ts->tokens.begin() + static_cast<long>(hi));

  // Default query position: the last question mark of the story.
  if (position < 0) {
    const int qmark = ds.vocab.find("?");
    for (size_t i = 0; i < tokens.size(); ++i)
      if (tokens[i] == qmark) position = static_cast<int>(i);
    FWM_CHECK(position >= 0, "export-alignment: story has no question mark");
  }
  FWM_CHECK(position < static_cast<int>(tokens.size()),
            "export-alignment: position beyond story end");

  fwm::CoreState state = model.initial_state();
  std::vector<fwm::WriteCommand> history;
  fwm::StepTrace trace;
  for (int t = 0; t <= position; ++t) {
    model.step_logits(state, tokens[static_cast<size_t>(t)], &trace);
    history.push_back(trace.cmd);
  }
  const fwm::Mat align =
      fwm::write_read_alignment(history, trace.query, trace.hops, model_cfg.key_mode);

  std::ofstream csv(out);
  if (!csv) throw std::runtime_error("cannot write " + out);
  csv << "hop";
  for (int t = 0; t <= position; ++t) csv << "," << ds.vocab.word(tokens[static_cast<size_t>(t)]);
  csv << "\n";
  for (int i = 0; i < align.rows(); ++i) {
    csv << (i + 1);
    for (int t = 0; t < align.cols(); ++t) csv << "," << align(i, t);
    csv << "\n";
  }
  std::cout << "wrote " << align.rows() << "x" << align.cols() << " alignment for story "
            << story_idx << " (query at position " << position << ") to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fast weight memory workbench"};
  app.require_subcommand(1);

  CommonArgs prep_args, qa_args, lm_args, rl_args, eval_args, gc_args, align_args;

  auto* prep = app.add_subcommand("prep-data", "build a dataset file");
  std::string babi_dir, prep_out;
  bool synthetic = false;
  prep->add_option("--babi-dir", babi_dir, "directory with qa*_{train,valid,test}.txt");
  prep->add_flag("--synthetic", synthetic, "generate the built-in synthetic corpus");
  prep->add_option("--out", prep_out, "output dataset path")->required();
  add_common(prep, &prep_args);

  auto* tqa = app.add_subcommand("train-qa", "train with the loss masked to answers");
  auto* tlm = app.add_subcommand("train-lm", "train on every non-padding token");
  std::string qa_data, qa_out, qa_resume, lm_data, lm_out, lm_resume;
  tqa->add_option("--data", qa_data, "dataset file")->required();
  tqa->add_option("--out", qa_out, "output directory")->required();
  tqa->add_option("--resume", qa_resume, "checkpoint to resume from");
  add_common(tqa, &qa_args);
  tlm->add_option("--data", lm_data, "dataset file")->required();
  tlm->add_option("--out", lm_out, "output directory")->required();
  tlm->add_option("--resume", lm_resume, "checkpoint to resume from");
  add_common(tlm, &lm_args);

  auto* trl = app.add_subcommand("train-rl", "actor-critic training on sampled graphs");
  std::string rl_out, rl_resume;
  trl->add_option("--out", rl_out, "output directory")->required();
  trl->add_option("--resume", rl_resume, "checkpoint to resume from");
  add_common(trl, &rl_args);

  auto* ev = app.add_subcommand("eval", "deterministic evaluation of a checkpoint");
  std::string ev_ckpt, ev_data, ev_graphs, ev_out, ev_split;
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--data", ev_data, "dataset file (seq checkpoints)");
  ev->add_option("--graphs", ev_graphs, "graph set json (agent checkpoints)");
  ev->add_option("--split", ev_split, "dataset split: train, valid or test");
  ev->add_option("--out", ev_out, "output directory")->required();
  add_common(ev, &eval_args);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  add_common(gc, &gc_args);

  auto* al = app.add_subcommand("export-alignment", "write-read key alignment as CSV");
  std::string al_ckpt, al_data, al_out, al_split;
  int al_story = 0, al_position = -1;
  al->add_option("--checkpoint", al_ckpt, "seq checkpoint")->required();
  al->add_option("--data", al_data, "dataset file")->required();
  al->add_option("--split", al_split, "dataset split: train, valid or test");
  al->add_option("--story", al_story, "story index within the split");
  al->add_option("--position", al_position, "query position (default: last '?')");
  al->add_option("--out", al_out, "output csv path")->required();
  add_common(al, &align_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (!ev_split.empty()) eval_args.overrides.push_back("split=" + ev_split);
  if (!al_split.empty()) align_args.overrides.push_back("split=" + al_split);

  try {
    if (prep->parsed()) return cmd_prep_data(prep_args, babi_dir, synthetic, prep_out);
    if (tqa->parsed()) return cmd_train_qa(qa_args, qa_data, qa_out, qa_resume, fwm::LossMode::kQa);
    if (tlm->parsed()) return cmd_train_qa(lm_args, lm_data, lm_out, lm_resume, fwm::LossMode::kLm);
    if (trl->parsed()) return cmd_train_rl(rl_args, rl_out, rl_resume);
    if (ev->parsed()) return cmd_eval(eval_args, ev_ckpt, ev_data, ev_graphs, ev_out);
    if (gc->parsed()) return cmd_gradcheck(gc_args);
    if (al->parsed())
      return cmd_export_alignment(align_args, al_ckpt, al_data, al_out, al_story, al_position);
  } catch (const fwm::NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
