#include "vasim/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace vasim {

namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// splitmix64 finalizer; derives independent sub-streams from a cell seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

BlockConfig choose_config(double info_density, double bandwidth, ConfigRule rule,
                          const CmabState* cmab, double cmab_epsilon, Rng& rng,
                          std::vector<std::pair<Context, BlockConfig>>* played) {
  switch (rule) {
    case ConfigRule::Cmab: {
      if (cmab == nullptr)
        throw std::invalid_argument("build_decision: bandit rule without a CmabState");
      const Context context = cmab->classify_context(info_density, bandwidth);
      const BlockConfig config = cmab->select_config(context, cmab_epsilon, rng);
      if (played != nullptr) played->emplace_back(context, config);
      return config;
    }
    case ConfigRule::UniformRandom:
      return config_from_index(static_cast<int>(rng.uniform_int(kConfigCount)));
    case ConfigRule::FixedBest:
    default:
      return BlockConfig{DetectModel::Yolov5x, Resolution::R640};
  }
}

// Executes the forced full-frame offload on slot 0 and seeds the tracking
// state with its detections, so local modes have something to reuse.
void run_warmup_offload(AnalyticsEnv& env, ConfigRule rule, const CmabState* cmab,
                        double cmab_epsilon, Rng& rng) {
  const SceneSlot& slot = env.current_slot();
  const int detected = slot.true_object_count;
  Decision decision;
  decision.offload = true;
  decision.roi = false;
  decision.block_configs.push_back(choose_config(
      detected, env.current_bandwidth(), rule, cmab, cmab_epsilon, rng, nullptr));
  env.step(decision);
  env.seed_tracking_state(detected);
}

struct Aggregate {
  double mean = 0.0;
  double sd = 0.0;
};

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double accum = 0.0;
    for (double v : values) accum += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(accum / static_cast<double>(values.size() - 1));
  }
  return out;
}

}  // namespace

const char* action_name(Action a) {
  switch (a) {
    case Action::Skip: return "Skip";
    case Action::Kcf: return "KCF";
    case Action::Csrt: return "CSRT";
    case Action::OffloadFull: return "Offload-Full";
    case Action::OffloadRoi: return "Offload-ROI";
  }
  return "?";
}

Policy make_baseline(const std::string& name) {
  if (name == "R-R") return Policy{name, ActionRule::UniformRandom, ConfigRule::UniformRandom};
  if (name == "R-C") return Policy{name, ActionRule::UniformRandom, ConfigRule::Cmab};
  if (name == "D-R") return Policy{name, ActionRule::Ddqn, ConfigRule::UniformRandom};
  if (name == "F-B") return Policy{name, ActionRule::AlwaysOffloadFull, ConfigRule::FixedBest};
  throw std::invalid_argument("make_baseline: unknown policy '" + name + "'");
}

Policy dcrl_policy() {
  return Policy{"DCRL", ActionRule::Ddqn, ConfigRule::Cmab};
}

std::vector<double> normalize_observation(const ObservationState& obs,
                                          const StateScale& scale) {
  return {obs.h, obs.b / scale.bandwidth, static_cast<double>(obs.c) / scale.objects,
          std::min(static_cast<double>(obs.p) / scale.stall, 1.0)};
}

Decision build_decision(Action action, const SceneSlot& slot, double bandwidth,
                        ConfigRule rule, const CmabState* cmab, double cmab_epsilon,
                        Rng& rng,
                        std::vector<std::pair<Context, BlockConfig>>* played) {
  Decision decision;
  switch (action) {
    case Action::Skip:
      decision.track = TrackMode::Skip;
      return decision;
    case Action::Kcf:
      decision.track = TrackMode::Kcf;
      return decision;
    case Action::Csrt:
      decision.track = TrackMode::Csrt;
      return decision;
    case Action::OffloadFull:
      decision.offload = true;
      decision.roi = false;
      decision.block_configs.push_back(
          choose_config(slot.true_object_count, bandwidth, rule, cmab, cmab_epsilon,
                        rng, played));
      return decision;
    case Action::OffloadRoi:
      decision.offload = true;
      decision.roi = true;
      decision.block_configs.reserve(slot.blocks.size());
      for (const BlockSpec& block : slot.blocks) {
        decision.block_configs.push_back(choose_config(
            block.info_density, bandwidth, rule, cmab, cmab_epsilon, rng, played));
      }
      return decision;
  }
  throw std::invalid_argument("build_decision: bad action");
}

EpisodeMetrics metrics_from_log(const std::vector<SlotLog>& log, double eta) {
  EpisodeMetrics m;
  m.log = log;
  if (log.empty()) throw std::invalid_argument("metrics_from_log: empty log");
  std::vector<StepOutcome> outcomes;
  outcomes.reserve(log.size());
  int successes = 0;
  double success_acc = 0.0;
  for (const SlotLog& entry : log) {
    m.cumulative_reward += entry.reward;
    m.mean_latency += entry.l_total;
    if (entry.success) {
      successes += 1;
      success_acc += entry.acc;
    }
    StepOutcome out;
    out.success = entry.success;
    out.acc = entry.acc;
    outcomes.push_back(out);
  }
  m.processing_rate = static_cast<double>(successes) / static_cast<double>(log.size());
  m.mean_accuracy = successes > 0 ? success_acc / static_cast<double>(successes) : 0.0;
  m.mean_latency /= static_cast<double>(log.size());
  m.utility = episode_utility(outcomes, eta);
  return m;
}

DcrlResult run_dcrl_training(const Trace& train, const SystemParams& sys,
                             const DdqnHyper& hyper, const CmabParams& cmab_params,
                             CmabState cmab, int passes, std::uint64_t seed,
                             ConfigRule config_rule) {
  if (passes < 0) throw std::invalid_argument("run_dcrl_training: passes must be >= 0");
  validate_hyper(hyper);
  Rng rng(seed);

  std::vector<int> sizes;
  sizes.push_back(4);
  for (int h : hyper.hidden_sizes) sizes.push_back(h);
  sizes.push_back(kActionCount);

  DcrlResult result;
  result.net = MlpNetwork::random_init(sizes, rng);
  result.target_net = result.net;
  result.cmab = std::move(cmab);
  if (passes == 0) return result;

  const bool bandit_active = config_rule == ConfigRule::Cmab;
  ReplayBuffer buffer(hyper.buffer_capacity);
  long slot_counter = 0;

  for (int pass = 0; pass < passes; ++pass) {
    AnalyticsEnv env(train, sys);
    run_warmup_offload(env, config_rule, &result.cmab, cmab_params.epsilon, rng);

    double pass_reward = 0.0;
    while (!env.done()) {
      const SceneSlot& slot = env.current_slot();
      const double bandwidth = env.current_bandwidth();
      const ObservationState obs = env.observation();
      const std::vector<double> state = normalize_observation(obs, hyper.scale);

      const int action_index = select_action(result.net, state, hyper.epsilon, rng);
      const Action action = static_cast<Action>(action_index);

      std::vector<std::pair<Context, BlockConfig>> played;
      const Decision decision =
          build_decision(action, slot, bandwidth, config_rule, &result.cmab,
                         cmab_params.epsilon, rng, &played);
      const StepOutcome outcome = env.step(decision);
      pass_reward += outcome.reward;

      if (is_offload(action) && bandit_active) {
        for (const auto& [context, config] : played) {
          result.cmab.update_estimate(context, config, outcome.reward);
        }
        if (action == Action::OffloadRoi) {
          for (const BlockSpec& block : slot.blocks) {
            result.cmab.update_density_average(block.info_density);
          }
        } else {
          result.cmab.update_density_average(slot.true_object_count);
        }
        result.cmab.update_bandwidth_average(bandwidth);
      }

      buffer.push(Transition{state, action_index, outcome.reward,
                             normalize_observation(env.observation(), hyper.scale),
                             env.done()});
      const std::optional<double> loss =
          train_step(result.net, result.target_net, buffer, hyper, rng);
      if (loss.has_value() && !std::isfinite(*loss)) {
        throw std::runtime_error("run_dcrl_training: non-finite training loss");
      }
      slot_counter += 1;
      if (slot_counter % hyper.sync_period == 0) {
        sync_target(result.net, result.target_net);
      }
    }
    result.pass_rewards.push_back(pass_reward);
  }
  return result;
}

EpisodeMetrics run_episode(const Policy& policy, const Trace& trace,
                           const SystemParams& sys, const MlpNetwork* qnet,
                           const CmabState* cmab, const StateScale& scale,
                           std::uint64_t seed) {
  if (policy.action_rule == ActionRule::Ddqn && qnet == nullptr)
    throw std::invalid_argument("run_episode: policy '" + policy.name +
                                "' needs a trained network");
  if (policy.config_rule == ConfigRule::Cmab && cmab == nullptr)
    throw std::invalid_argument("run_episode: policy '" + policy.name +
                                "' needs a trained bandit state");
  if (trace.slots.size() < 2)
    throw std::invalid_argument("run_episode: trace too short for warm-up plus episode");

  Rng rng(seed);
  AnalyticsEnv env(trace, sys);
  run_warmup_offload(env, policy.config_rule, cmab, 0.0, rng);

  std::vector<SlotLog> log;
  log.reserve(trace.slots.size() - 1);
  while (!env.done()) {
    const SceneSlot& slot = env.current_slot();
    const double bandwidth = env.current_bandwidth();

    Action action = Action::OffloadFull;
    switch (policy.action_rule) {
      case ActionRule::Ddqn:
        action = static_cast<Action>(select_action(
            *qnet, normalize_observation(env.observation(), scale), 0.0, rng));
        break;
      case ActionRule::UniformRandom:
        action = static_cast<Action>(rng.uniform_int(kActionCount));
        break;
      case ActionRule::AlwaysOffloadFull:
        action = Action::OffloadFull;
        break;
    }

    const Decision decision =
        build_decision(action, slot, bandwidth, policy.config_rule, cmab, 0.0, rng,
                       nullptr);
    const StepOutcome outcome = env.step(decision);

    SlotLog entry;
    entry.slot = slot.slot_index;
    entry.action = action;
    entry.block_count = decision.offload ? static_cast<int>(decision.block_configs.size()) : 0;
    entry.data_mb = outcome.data_mb;
    entry.l_total = outcome.l_total;
    entry.acc = outcome.acc;
    entry.success = outcome.success;
    entry.reward = outcome.reward;
    log.push_back(entry);
  }
  return metrics_from_log(log, sys.eta);
}

std::vector<CompareCell> compare(const Trace& train, const Trace& test,
                                 const CompareOptions& options) {
  if (options.seeds.empty()) throw std::invalid_argument("compare: need at least one seed");

  struct Job {
    Policy policy;
    std::uint64_t seed = 0;
  };
  std::vector<Job> jobs;
  for (const std::string& name : options.policies) {
    const Policy policy = name == "DCRL" ? dcrl_policy() : make_baseline(name);
    for (std::uint64_t seed : options.seeds) {
      jobs.push_back(Job{policy, seed});
    }
  }

  std::vector<CompareCell> cells(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> cursor{0};

  auto run_cell = [&](const Job& job) {
    // Sub-seeds depend only on the cell seed, not the policy, so identical
    // policies produce identical rows and differences stay policy-attributable.
    const std::uint64_t pretrain_seed = mix_seed(job.seed, 1);
    const std::uint64_t train_seed = mix_seed(job.seed, 2);
    const std::uint64_t eval_seed = mix_seed(job.seed, 3);

    std::optional<CmabState> cmab;
    std::optional<MlpNetwork> net;
    if (job.policy.name == "DCRL") {
      CmabState pretrained = pretrain_cmab(train, options.sys, options.cmab_params,
                                           options.pretrain_slots, pretrain_seed);
      DcrlResult trained =
          run_dcrl_training(train, options.sys, options.hyper, options.cmab_params,
                            std::move(pretrained), options.passes, train_seed,
                            ConfigRule::Cmab);
      net = std::move(trained.net);
      cmab = std::move(trained.cmab);
    } else if (job.policy.config_rule == ConfigRule::Cmab) {
      cmab = pretrain_cmab(train, options.sys, options.cmab_params,
                           options.pretrain_slots, pretrain_seed);
    } else if (job.policy.action_rule == ActionRule::Ddqn) {
      DcrlResult trained = run_dcrl_training(
          train, options.sys, options.hyper, options.cmab_params,
          CmabState(options.cmab_params), options.passes, train_seed,
          ConfigRule::UniformRandom);
      net = std::move(trained.net);
    }

    CompareCell cell;
    cell.policy = job.policy.name;
    cell.seed = job.seed;
    cell.metrics = run_episode(job.policy, test, options.sys,
                               net.has_value() ? &*net : nullptr,
                               cmab.has_value() ? &*cmab : nullptr,
                               options.hyper.scale, eval_seed);
    return cell;
  };

  auto worker = [&]() {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= jobs.size()) break;
      try {
        cells[i] = run_cell(jobs[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  unsigned thread_count = options.threads > 0
                              ? static_cast<unsigned>(options.threads)
                              : std::max(1u, std::thread::hardware_concurrency());
  thread_count = std::min<unsigned>(thread_count, static_cast<unsigned>(jobs.size()));
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (unsigned i = 0; i < thread_count; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::string& err : errors) {
    if (!err.empty()) throw std::runtime_error("compare: " + err);
  }
  return cells;
}

std::string comparison_csv(const std::vector<CompareCell>& cells) {
  std::ostringstream out;
  out << "policy,seed,cum_reward,processing_rate,mean_accuracy,mean_latency,utility\n";
  auto metric_row = [&](const EpisodeMetrics& m) {
    out << fmt_real(m.cumulative_reward) << ',' << fmt_real(m.processing_rate) << ','
        << fmt_real(m.mean_accuracy) << ',' << fmt_real(m.mean_latency) << ','
        << fmt_real(m.utility) << '\n';
  };

  std::vector<std::string> order;
  for (const CompareCell& cell : cells) {
    if (std::find(order.begin(), order.end(), cell.policy) == order.end()) {
      order.push_back(cell.policy);
    }
    out << cell.policy << ',' << cell.seed << ',';
    metric_row(cell.metrics);
  }

  for (const std::string& policy : order) {
    std::vector<double> reward, rate, acc, latency, utility;
    for (const CompareCell& cell : cells) {
      if (cell.policy != policy) continue;
      reward.push_back(cell.metrics.cumulative_reward);
      rate.push_back(cell.metrics.processing_rate);
      acc.push_back(cell.metrics.mean_accuracy);
      latency.push_back(cell.metrics.mean_latency);
      utility.push_back(cell.metrics.utility);
    }
    const Aggregate stats[] = {aggregate(reward), aggregate(rate), aggregate(acc),
                               aggregate(latency), aggregate(utility)};
    out << policy << ",mean";
    for (const Aggregate& s : stats) out << ',' << fmt_real(s.mean);
    out << '\n' << policy << ",sd";
    for (const Aggregate& s : stats) out << ',' << fmt_real(s.sd);
    out << '\n';
  }
  return out.str();
}

std::string slot_log_csv(const std::vector<SlotLog>& log) {
  std::ostringstream out;
  out << "slot,action,s_count,d_t,l_total,acc,q,reward\n";
  for (const SlotLog& entry : log) {
    out << entry.slot << ',' << action_name(entry.action) << ',' << entry.block_count
        << ',' << fmt_real(entry.data_mb) << ',' << fmt_real(entry.l_total) << ','
        << fmt_real(entry.acc) << ',' << (entry.success ? 1 : 0) << ','
        << fmt_real(entry.reward) << '\n';
  }
  return out.str();
}

}  // namespace vasim
