// Command-line front end: trace generation, bandit pretraining, joint
// training, evaluation, and the five-policy comparison, all driven by one
// flat config file and named seeds so every artifact is reproducible.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "vasim/cmab.hpp"
#include "vasim/config.hpp"
#include "vasim/ddqn.hpp"
#include "vasim/env.hpp"
#include "vasim/orchestrator.hpp"
#include "vasim/trace.hpp"

namespace fs = std::filesystem;
using namespace vasim;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> slots;
};

RunConfig load_config(const CommonArgs& args) {
  RunConfig config = args.config_path.empty() ? default_config()
                                              : parse_config_file(args.config_path);
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  return config;
}

// Every subcommand drops the effective config next to its artifacts so a run
// can be reproduced from the output directory alone.
void write_effective_config(const RunConfig& config) {
  fs::create_directories(config.out_dir);
  const std::string path = config.out_dir + "/effective-config.txt";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << dump_config(config);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void require_file(const std::string& path, const std::string& hint) {
  if (!fs::exists(path)) {
    throw std::runtime_error("missing input " + path + " (" + hint + ")");
  }
}

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string metrics_csv(const std::string& policy, std::uint64_t seed,
                        const EpisodeMetrics& m) {
  std::ostringstream out;
  out << "policy,seed,cum_reward,processing_rate,mean_accuracy,mean_latency,utility\n";
  out << policy << ',' << seed << ',' << fmt_real(m.cumulative_reward) << ','
      << fmt_real(m.processing_rate) << ',' << fmt_real(m.mean_accuracy) << ','
      << fmt_real(m.mean_latency) << ',' << fmt_real(m.utility) << '\n';
  return out.str();
}

int cmd_gen_trace(const CommonArgs& args) {
  RunConfig config = load_config(args);
  if (args.slots) config.slots = *args.slots;
  if (args.seed) config.seed_trace = *args.seed;
  write_effective_config(config);

  const Trace trace = generate_trace(config.trace, config.rho, config.sigma,
                                     config.b_min, config.seed_trace, config.slots);
  const std::string path = config.out_dir + "/trace.csv";
  write_trace(trace, path);
  std::cout << "wrote " << path << " (" << trace.size() << " slots, seed "
            << config.seed_trace << ")\n";
  return 0;
}

int cmd_pretrain_cmab(const CommonArgs& args, const std::string& trace_path) {
  RunConfig config = load_config(args);
  if (args.slots) config.pretrain_slots = *args.slots;
  if (args.seed) config.seed_pretrain = *args.seed;
  const std::string trace_file =
      trace_path.empty() ? config.out_dir + "/trace.csv" : trace_path;
  require_file(trace_file, "run gen-trace first");
  write_effective_config(config);

  const Trace trace = read_trace(trace_file);
  const auto [train, test] = split_trace(trace, config.train_fraction);
  const CmabState state = pretrain_cmab(train, config.sys, config.cmab,
                                        config.pretrain_slots, config.seed_pretrain);
  const std::string path = config.out_dir + "/cmab.ckpt";
  state.save(path);
  std::cout << "wrote " << path << " (" << config.pretrain_slots << " slots, seed "
            << config.seed_pretrain << ")\n";
  return 0;
}

int cmd_train(const CommonArgs& args, const std::string& trace_path,
              const std::string& cmab_path) {
  RunConfig config = load_config(args);
  if (args.seed) config.seed_train = *args.seed;
  const std::string trace_file =
      trace_path.empty() ? config.out_dir + "/trace.csv" : trace_path;
  const std::string cmab_file =
      cmab_path.empty() ? config.out_dir + "/cmab.ckpt" : cmab_path;
  require_file(trace_file, "run gen-trace first");
  require_file(cmab_file, "run pretrain-cmab first");
  write_effective_config(config);

  const Trace trace = read_trace(trace_file);
  const auto [train, test] = split_trace(trace, config.train_fraction);
  CmabState cmab = CmabState::load(cmab_file);

  const DcrlResult result =
      run_dcrl_training(train, config.sys, config.ddqn, config.cmab, std::move(cmab),
                        config.passes, config.seed_train, ConfigRule::Cmab);

  save_network(result.net, config.out_dir + "/ddqn.ckpt");
  result.cmab.save(config.out_dir + "/cmab.ckpt");

  std::ostringstream log;
  log << "pass,cumulative_reward\n";
  for (std::size_t i = 0; i < result.pass_rewards.size(); ++i) {
    log << i << ',' << fmt_real(result.pass_rewards[i]) << '\n';
  }
  write_text(config.out_dir + "/training-log.csv", log.str());

  std::cout << "wrote " << config.out_dir << "/ddqn.ckpt, updated cmab.ckpt ("
            << config.passes << " passes over " << train.size() << " slots, seed "
            << config.seed_train << ")\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& policy_name,
             const std::string& trace_path, bool slot_log) {
  RunConfig config = load_config(args);
  if (args.seed) config.seed_eval = *args.seed;
  const std::string trace_file =
      trace_path.empty() ? config.out_dir + "/trace.csv" : trace_path;
  require_file(trace_file, "run gen-trace first");

  const Policy policy = policy_name == "DCRL" ? dcrl_policy() : make_baseline(policy_name);
  std::optional<MlpNetwork> net;
  std::optional<CmabState> cmab;
  if (policy.action_rule == ActionRule::Ddqn) {
    const std::string path = config.out_dir + "/ddqn.ckpt";
    require_file(path, "run train first");
    net = load_network(path);
  }
  if (policy.config_rule == ConfigRule::Cmab) {
    const std::string path = config.out_dir + "/cmab.ckpt";
    require_file(path, "run pretrain-cmab or train first");
    cmab = CmabState::load(path);
  }
  write_effective_config(config);

  const Trace trace = read_trace(trace_file);
  const auto [train, test] = split_trace(trace, config.train_fraction);
  const EpisodeMetrics metrics =
      run_episode(policy, test, config.sys, net.has_value() ? &*net : nullptr,
                  cmab.has_value() ? &*cmab : nullptr, config.ddqn.scale,
                  config.seed_eval);

  write_text(config.out_dir + "/eval.csv",
             metrics_csv(policy.name, config.seed_eval, metrics));
  if (slot_log) {
    write_text(config.out_dir + "/slots-" + policy.name + ".csv",
               slot_log_csv(metrics.log));
  }
  std::cout << "policy " << policy.name << ": reward " << metrics.cumulative_reward
            << ", rate " << metrics.processing_rate << ", acc " << metrics.mean_accuracy
            << ", latency " << metrics.mean_latency << ", utility " << metrics.utility
            << "\n";
  return 0;
}

int cmd_compare(const CommonArgs& args, const std::string& trace_path, bool slot_logs) {
  RunConfig config = load_config(args);
  const std::string trace_file =
      trace_path.empty() ? config.out_dir + "/trace.csv" : trace_path;
  require_file(trace_file, "run gen-trace first");
  write_effective_config(config);

  const Trace trace = read_trace(trace_file);
  const auto [train, test] = split_trace(trace, config.train_fraction);

  CompareOptions options;
  options.seeds = config.compare_seeds;
  options.pretrain_slots = config.pretrain_slots;
  options.passes = config.passes;
  options.sys = config.sys;
  options.hyper = config.ddqn;
  options.cmab_params = config.cmab;
  options.threads = config.threads;

  const std::vector<CompareCell> cells = compare(train, test, options);
  write_text(config.out_dir + "/comparison.csv", comparison_csv(cells));
  if (slot_logs) {
    for (const CompareCell& cell : cells) {
      write_text(config.out_dir + "/slots-" + cell.policy + "-" +
                     std::to_string(cell.seed) + ".csv",
                 slot_log_csv(cell.metrics.log));
    }
  }
  std::cout << "wrote " << config.out_dir << "/comparison.csv ("
            << options.policies.size() << " policies x " << options.seeds.size()
            << " seeds on " << test.size() << " test slots)\n";
  return 0;
}

int cmd_dump_config(const CommonArgs& args) {
  const RunConfig config = load_config(args);
  std::cout << dump_config(config);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge video analytics offloading simulator"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string trace_path;
  std::string cmab_path;
  std::string policy_name = "DCRL";
  bool slot_log = false;

  auto add_common = [&](CLI::App* cmd, bool with_slots) {
    cmd->add_option("--config", args.config_path, "config file (defaults when omitted)");
    cmd->add_option("--out", args.out_dir, "output directory (overrides out.dir)");
    cmd->add_option("--seed", args.seed, "seed override for this subcommand");
    if (with_slots) cmd->add_option("--slots", args.slots, "slot count override");
  };

  CLI::App* gen = app.add_subcommand("gen-trace", "generate a scene+bandwidth trace CSV");
  add_common(gen, true);

  CLI::App* pre = app.add_subcommand("pretrain-cmab", "warm up the configuration bandit");
  add_common(pre, true);
  pre->add_option("--trace", trace_path, "trace CSV (default <out>/trace.csv)");

  CLI::App* train = app.add_subcommand("train", "joint offloading + configuration training");
  add_common(train, false);
  train->add_option("--trace", trace_path, "trace CSV (default <out>/trace.csv)");
  train->add_option("--cmab", cmab_path, "bandit checkpoint (default <out>/cmab.ckpt)");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a policy on the test split");
  add_common(eval, false);
  eval->add_option("--policy", policy_name, "DCRL, R-R, R-C, D-R or F-B");
  eval->add_option("--trace", trace_path, "trace CSV (default <out>/trace.csv)");
  eval->add_flag("--slot-log", slot_log, "also write the per-slot log CSV");

  CLI::App* cmp = app.add_subcommand("compare", "train and evaluate all five policies");
  add_common(cmp, false);
  cmp->add_option("--trace", trace_path, "trace CSV (default <out>/trace.csv)");
  cmp->add_flag("--slot-logs", slot_log, "also write per-cell slot log CSVs");

  CLI::App* dump = app.add_subcommand("dump-config", "print the effective config");
  dump->add_option("--config", args.config_path, "config file (defaults when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_trace(args);
    if (pre->parsed()) return cmd_pretrain_cmab(args, trace_path);
    if (train->parsed()) return cmd_train(args, trace_path, cmab_path);
    if (eval->parsed()) return cmd_eval(args, policy_name, trace_path, slot_log);
    if (cmp->parsed()) return cmd_compare(args, trace_path, slot_log);
    if (dump->parsed()) return cmd_dump_config(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
