#ifndef VASIM_ORCHESTRATOR_HPP_
#define VASIM_ORCHESTRATOR_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vasim/cmab.hpp"
#include "vasim/ddqn.hpp"
#include "vasim/env.hpp"

namespace vasim {

// The five per-slot processing modes the offloading agent chooses among.
enum class Action : int {
  Skip = 0,
  Kcf = 1,
  Csrt = 2,
  OffloadFull = 3,
  OffloadRoi = 4,
};
constexpr int kActionCount = 5;

const char* action_name(Action a);

inline bool is_offload(Action a) {
  return a == Action::OffloadFull || a == Action::OffloadRoi;
}

// How a policy picks the per-slot action and the per-block configuration.
enum class ActionRule { Ddqn, UniformRandom, AlwaysOffloadFull };
enum class ConfigRule { Cmab, UniformRandom, FixedBest };

struct Policy {
  std::string name;
  ActionRule action_rule;
  ConfigRule config_rule;
};

// The four benchmark policies; throws on any other name.
//   R-R: random action, random configs      R-C: random action, bandit configs
//   D-R: learned action, random configs     F-B: always full frame, (x, 640p)
Policy make_baseline(const std::string& name);
Policy dcrl_policy();

std::vector<double> normalize_observation(const ObservationState& obs,
                                          const StateScale& scale);

// Expands an action into a concrete Decision. Offload actions consult the
// config rule per transmitted block (the whole frame counts as one block
// whose information density is the slot's object count); `played` receives
// the (context, arm) pairs when the bandit chose, for the caller's updates.
Decision build_decision(Action action, const SceneSlot& slot, double bandwidth,
                        ConfigRule rule, const CmabState* cmab, double cmab_epsilon,
                        Rng& rng,
                        std::vector<std::pair<Context, BlockConfig>>* played);

struct SlotLog {
  int slot = 0;
  Action action = Action::Skip;
  int block_count = 0;  // transmitted blocks; 0 for local slots
  double data_mb = 0.0;
  double l_total = 0.0;
  double acc = 0.0;
  bool success = false;
  double reward = 0.0;
};

struct EpisodeMetrics {
  double cumulative_reward = 0.0;
  double processing_rate = 0.0;  // successes / slots
  double mean_accuracy = 0.0;    // over successful slots; 0 if none
  double mean_latency = 0.0;     // over all slots
  double utility = 0.0;
  std::vector<SlotLog> log;
};

EpisodeMetrics metrics_from_log(const std::vector<SlotLog>& log, double eta);

struct DcrlResult {
  MlpNetwork net;
  MlpNetwork target_net;
  CmabState cmab;
  std::vector<double> pass_rewards;  // summed slot reward per training pass
};

// The joint training loop. Each pass walks the training trace once: slot 0
// is a forced full-frame offload that initializes the tracking state, then
// every slot runs epsilon-greedy action selection, decision expansion,
// environment step, bandit updates on offload slots (when the bandit rule
// is active), one replay store, and one network update, with the target net
// refreshed every sync_period slots. Deterministic per seed. The supplied
// CmabState is expected to come from pretrain_cmab.
DcrlResult run_dcrl_training(const Trace& train, const SystemParams& sys,
                             const DdqnHyper& hyper, const CmabParams& cmab_params,
                             CmabState cmab, int passes, std::uint64_t seed,
                             ConfigRule config_rule = ConfigRule::Cmab);

// Exploitation-only walk over a trace: all epsilon values 0, agents frozen.
// Slot 0 is the same forced warm-up offload and is excluded from metrics.
EpisodeMetrics run_episode(const Policy& policy, const Trace& trace,
                           const SystemParams& sys, const MlpNetwork* qnet,
                           const CmabState* cmab, const StateScale& scale,
                           std::uint64_t seed);

struct CompareOptions {
  std::vector<std::string> policies = {"DCRL", "R-R", "R-C", "D-R", "F-B"};
  std::vector<std::uint64_t> seeds;
  int pretrain_slots = 2000;
  int passes = 25;  // training passes for the learned policies
  SystemParams sys;
  DdqnHyper hyper;
  CmabParams cmab_params;
  int threads = 0;  // 0 = hardware concurrency
};

struct CompareCell {
  std::string policy;
  std::uint64_t seed = 0;
  EpisodeMetrics metrics;
};

// Trains fresh agents per (policy, seed) where the policy learns, evaluates
// everything on the shared test trace, and returns cells ordered by
// (policy, seed). Cells run in parallel; results do not depend on the
// thread count.
std::vector<CompareCell> compare(const Trace& train, const Trace& test,
                                 const CompareOptions& options);

// Per-seed rows followed by mean and sample-sd aggregate rows per policy.
std::string comparison_csv(const std::vector<CompareCell>& cells);

std::string slot_log_csv(const std::vector<SlotLog>& log);

}  // namespace vasim

#endif  // VASIM_ORCHESTRATOR_HPP_
