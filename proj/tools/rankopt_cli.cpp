// rankopt: train and evaluate mAP-optimizing embedding models.
//
//   rankopt gen-data  --out data.csv [--classes 8 --per-class 60 --dim 16 ...]
//   rankopt train     --data data.csv --model-out model.bin --metrics-out metrics.csv
//   rankopt eval      --data data.csv --model model.bin --episodes 1000 --n-way 5 --k-shot 1
//   rankopt inspect   --data data.csv --model model.bin
//   rankopt selfcheck
//
// Every subcommand accepts --config FILE with one `key=value` per line
// (`#` starts a comment); keys are long flag names without the dashes.
// Flags given on the command line override the file.

#include "rankopt/checkpoint.hpp"
#include "rankopt/data.hpp"
#include "rankopt/errors.hpp"
#include "rankopt/inference.hpp"
#include "rankopt/learner.hpp"
#include "rankopt/parallel.hpp"
#include "rankopt/selfcheck.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace rankopt;

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kDiverged = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataOptions {
  std::string path;
  std::string split = "all";
  double train_fraction = 0.5;
  double validation_fraction = 0.0;
};

void add_data_options(CLI::App* sub, DataOptions& d, const std::string& default_split) {
  d.split = default_split;
  sub->add_option("--data", d.path, "Dataset CSV (class_id, features...)")->required();
  sub->add_option("--split", d.split, "Class split to use")
      ->check(CLI::IsMember({"all", "train", "validation", "test"}))
      ->capture_default_str();
  sub->add_option("--train-fraction", d.train_fraction, "Fraction of classes in the train split")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_option("--val-fraction", d.validation_fraction,
                  "Fraction of classes in the validation split")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

Dataset load_split(const DataOptions& d) {
  auto ds = load_dataset(d.path);
  ds.validate();
  if (d.split == "all") return ds;
  if (d.train_fraction + d.validation_fraction > 1.0)
    throw UsageError("--train-fraction plus --val-fraction exceeds 1");
  auto s = split_classes(ds, d.train_fraction, d.validation_fraction);
  Dataset out = d.split == "train" ? s.train : d.split == "validation" ? s.validation : s.test;
  if (out.classes.empty())
    throw DataError(d.path + ": split '" + d.split + "' has no classes");
  return out;
}

// Reads `key=value` lines into flag arguments.
std::vector<std::string> config_arguments(const std::string& path, const CLI::App& sub) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open " + path);
  std::vector<std::string> args;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("--config " + path + ":" + std::to_string(line_no) + ": expected key=value");
    auto strip = [](std::string s) {
      const auto f = s.find_first_not_of(" \t\r");
      if (f == std::string::npos) return std::string{};
      return s.substr(f, s.find_last_not_of(" \t\r") - f + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key == "config" || sub.get_option_no_throw("--" + key) == nullptr)
      throw UsageError("--config " + path + ":" + std::to_string(line_no) + ": unknown key '" +
                       key + "' for " + sub.get_name());
    args.push_back("--" + key);
    args.push_back(value);
  }
  return args;
}

void print_checks(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks) {
    std::cout << (c.ok() ? "PASS " : "FAIL ") << c.name << ": " << c.passed << "/" << c.total;
    if (!c.ok()) std::cout << "  (" << c.detail << ")";
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedding training by direct mean Average Precision optimization", "rankopt"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  std::string config_path;
  unsigned threads = default_thread_count();
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value configuration file");
  };

  // gen-data
  SyntheticSpec synth;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic Gaussian-cluster dataset");
  add_common(gen);
  gen->add_option("--out", gen_out, "Output CSV")->required();
  gen->add_option("--classes", synth.n_classes)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--per-class", synth.per_class)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--dim", synth.dim)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--spread", synth.spread)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--separation", synth.separation)->check(CLI::NonNegativeNumber)->capture_default_str();
  gen->add_option("--seed", synth.seed)->capture_default_str();
  gen->add_option("--informative-dims", synth.informative_dims,
                  "Coordinates carrying class signal (0 = all)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  gen->add_option("--nuisance-spread", synth.nuisance_spread,
                  "Noise std of the non-informative coordinates")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  // train
  DataOptions train_data;
  GradientRule rule;
  TrainConfig tc;
  std::string rule_name = "dlm", direction_name = "positive";
  std::string model_in, model_out, metrics_out;
  Index hidden = 64, embed_dim = 32;
  auto* tr = app.add_subcommand("train", "Train an embedding model with mAP-SSVM or mAP-DLM");
  add_common(tr);
  add_data_options(tr, train_data, "train");
  tr->add_option("--model-out", model_out, "Checkpoint to write")->required();
  tr->add_option("--metrics-out", metrics_out, "Per-step metrics CSV")->required();
  tr->add_option("--model-in", model_in, "Warm-start checkpoint");
  tr->add_option("--rule", rule_name)->check(CLI::IsMember({"dlm", "ssvm"}))->capture_default_str();
  tr->add_option("--direction", direction_name)
      ->check(CLI::IsMember({"positive", "negative"}))
      ->capture_default_str();
  tr->add_option("--epsilon", rule.epsilon)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--alpha", rule.alpha)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--lr", tc.learning_rate)->check(CLI::NonNegativeNumber)->capture_default_str();
  tr->add_option("--decay-every", tc.decay_every, "Steps between decays (0 = never)")->capture_default_str();
  tr->add_option("--decay-factor", tc.decay_factor)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  tr->add_option("--steps", tc.max_steps)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--classes-per-batch", tc.batch.classes_per_batch)->check(CLI::Range(2, 1 << 20))->capture_default_str();
  tr->add_option("--points-per-class", tc.batch.points_per_class)->check(CLI::Range(2, 1 << 20))->capture_default_str();
  tr->add_option("--hidden", hidden)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--embed-dim", embed_dim)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--seed", tc.seed)->capture_default_str();
  tr->add_option("--threads", threads)->check(CLI::PositiveNumber);

  // eval
  DataOptions eval_data;
  EpisodeSpec episode;
  std::size_t n_episodes = 1000;
  std::string eval_model;
  auto* ev = app.add_subcommand("eval", "Few-shot classification and retrieval over episodes");
  add_common(ev);
  add_data_options(ev, eval_data, "test");
  ev->add_option("--model", eval_model, "Checkpoint")->required();
  ev->add_option("--episodes", n_episodes)->check(CLI::Range(2, 1 << 30))->capture_default_str();
  ev->add_option("--n-way", episode.n_way)->check(CLI::Range(2, 1 << 20))->capture_default_str();
  ev->add_option("--k-shot", episode.k_shot)->check(CLI::PositiveNumber)->capture_default_str();
  ev->add_option("--n-query", episode.n_query)->check(CLI::PositiveNumber)->capture_default_str();
  ev->add_option("--seed", episode.seed)->capture_default_str();
  ev->add_option("--threads", threads)->check(CLI::PositiveNumber);

  // inspect
  DataOptions inspect_data;
  std::string inspect_model;
  BatchShape inspect_batch;
  double inspect_epsilon = 1.0;
  std::uint64_t inspect_seed = 0;
  auto* in = app.add_subcommand("inspect", "Show standard and loss-augmented inference on one batch");
  add_common(in);
  add_data_options(in, inspect_data, "all");
  in->add_option("--model", inspect_model, "Checkpoint")->required();
  in->add_option("--classes-per-batch", inspect_batch.classes_per_batch)->check(CLI::Range(2, 1 << 20))->capture_default_str();
  in->add_option("--points-per-class", inspect_batch.points_per_class)->check(CLI::Range(2, 1 << 20))->capture_default_str();
  in->add_option("--epsilon", inspect_epsilon)->check(CLI::PositiveNumber)->capture_default_str();
  in->add_option("--seed", inspect_seed)->capture_default_str();

  // selfcheck
  SelfcheckOptions sc;
  auto* self = app.add_subcommand("selfcheck", "Run oracle and gradient verification suites");
  add_common(self);
  self->add_option("--seed", sc.seed)->capture_default_str();

  // Splice config-file arguments in front of the user's own flags.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (!args.empty()) {
      std::optional<std::string> cfg;
      for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) cfg = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) cfg = args[i].substr(9);
      }
      if (cfg) {
        const CLI::App* sub = nullptr;
        for (const auto* s : app.get_subcommands({}))
          if (s->get_name() == args[0]) sub = s;
        if (sub == nullptr) throw UsageError("unknown subcommand '" + args[0] + "'");
        auto extra = config_arguments(*cfg, *sub);
        args.insert(args.begin() + 1, extra.begin(), extra.end());
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  } catch (const UsageError& e) {
    std::cerr << "rankopt: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*gen) {
      save_dataset(gen_out, generate_synthetic(synth));
      std::cout << "wrote " << synth.n_classes * synth.per_class << " points to " << gen_out << '\n';
    } else if (*tr) {
      rule.method = rule_name == "ssvm" ? Method::SSVM : Method::DLM;
      rule.direction = direction_name == "negative" ? Direction::Negative : Direction::Positive;
      tc.threads = threads;
      const auto data = load_split(train_data);
      Model model = model_in.empty() ? Model::glorot({data.dim, hidden, embed_dim}, tc.seed)
                                     : load_checkpoint(model_in);
      if (model.input_dim() != data.dim)
        throw DataError("--model-in " + model_in + ": input dimension " +
                        std::to_string(model.input_dim()) + " does not match --data " +
                        train_data.path + " (" + std::to_string(data.dim) + ")");

      std::ofstream metrics(metrics_out);
      if (!metrics) throw DataError("--metrics-out: cannot write " + metrics_out);
      write_metrics_header(metrics);
      // Rows are flushed as they come for monitoring; a failed run removes the file.
      std::optional<TrainResult> trained;
      try {
        trained = train(std::move(model), data, rule, tc, [&](const MetricsRow& row) {
          write_metrics_row(metrics, row);
          metrics.flush();
        });
      } catch (...) {
        metrics.close();
        std::error_code ec;
        std::filesystem::remove(metrics_out, ec);
        throw;
      }
      auto& result = *trained;
      save_checkpoint(model_out, result.model);
      const auto& last = result.log.back();
      std::cout << "trained " << result.log.size() << " steps; final batch mAP " << last.batch_map
                << ", objective " << last.objective << '\n';
    } else if (*ev) {
      const auto data = load_split(eval_data);
      const auto model = load_checkpoint(eval_model);
      if (model.input_dim() != data.dim)
        throw DataError("--model " + eval_model + ": input dimension does not match --data " +
                        eval_data.path);
      const auto s = evaluate(model, data, episode, n_episodes, threads);
      std::cout << std::fixed << std::setprecision(4)
                << "episodes,n_way,k_shot,accuracy,accuracy_ci95,retrieval_map,retrieval_map_ci95\n"
                << s.episodes << ',' << episode.n_way << ',' << episode.k_shot << ','
                << s.accuracy.mean << ',' << s.accuracy.half_width << ','
                << s.retrieval_map.mean << ',' << s.retrieval_map.half_width << '\n';
    } else if (*in) {
      const auto data = load_split(inspect_data);
      const auto model = load_checkpoint(inspect_model);
      if (model.input_dim() != data.dim)
        throw DataError("--model " + inspect_model + ": input dimension does not match --data " +
                        inspect_data.path);
      const auto batch = sample_batch(data, inspect_batch.classes_per_batch,
                                      inspect_batch.points_per_class, inspect_seed);
      const Eigen::MatrixXd emb = model.embed_all(batch.points);
      std::cout << "query,label,mode,positions,F,AP,objective\n" << std::setprecision(6);
      for (const auto& d : decompose_batch(batch)) {
        const auto cq = canonicalize(d, query_similarities(emb, d.query_index));
        auto show = [&](const char* name, const Interleaving& il, const AugmentedObjective& obj) {
          std::cout << d.query_index << ',' << batch.labels[static_cast<std::size_t>(d.query_index)]
                    << ',' << name << ',';
          for (std::size_t i = 0; i < il.positions.size(); ++i)
            std::cout << (i ? " " : "") << il.positions[i] + 1;
          std::cout << ',' << interleaving_score(cq, il) << ',' << interleaving_ap(cq, il) << ','
                    << augmented_value(cq, il, obj) << '\n';
        };
        show("y_w", standard_inference(cq), {InferenceMode::Standard, inspect_epsilon});
        show("y_gt", ground_truth(cq), {InferenceMode::Standard, inspect_epsilon});
        for (auto mode : {InferenceMode::Hinge, InferenceMode::DirectPositive,
                          InferenceMode::DirectNegative}) {
          const AugmentedObjective obj{mode, inspect_epsilon};
          show(to_string(mode), loss_augmented_inference(cq, obj), obj);
        }
      }
    } else if (*self) {
      const auto checks = run_selfcheck(sc);
      print_checks(checks);
      const auto failed = std::count_if(checks.begin(), checks.end(),
                                        [](const CheckResult& c) { return !c.ok(); });
      std::cout << checks.size() - static_cast<std::size_t>(failed) << " passed, " << failed
                << " failed\n";
      return failed == 0 ? kOk : kDataError;
    }
  } catch (const Diverged& e) {
    std::cerr << "rankopt: diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const UsageError& e) {
    std::cerr << "rankopt: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "rankopt: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}
