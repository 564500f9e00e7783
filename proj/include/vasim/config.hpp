#ifndef VASIM_CONFIG_HPP_
#define VASIM_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "vasim/cmab.hpp"
#include "vasim/ddqn.hpp"
#include "vasim/env.hpp"
#include "vasim/trace.hpp"

namespace vasim {

// Every tunable of the simulator, grouped by subsystem. Defaults reproduce
// the standard experiment; a config file overrides individual keys.
struct RunConfig {
  SceneGenParams trace;
  double rho = 10.0;
  double sigma = 5.0;
  double b_min = 0.5;
  SystemParams sys;
  DdqnHyper ddqn;
  CmabParams cmab;

  int slots = 2500;             // trace length T
  double train_fraction = 0.8;  // contiguous train prefix share
  int passes = 25;              // joint-training passes over the train split
  int pretrain_slots = 2000;    // bandit warm-up slots
  int threads = 0;              // comparison worker threads; 0 = all cores

  std::uint64_t seed_trace = 7;
  std::uint64_t seed_pretrain = 11;
  std::uint64_t seed_train = 13;
  std::uint64_t seed_eval = 17;
  std::vector<std::uint64_t> compare_seeds = {101, 102, 103, 104, 105};

  std::string out_dir = "out";
};

// Flat `section.key=value` text format, one key per line, `#` comments.
// Unknown keys and domain violations are rejected with the key name and the
// violated bound in the message. Derived fields (bandit initial bandwidth
// average, network input scales) follow the bandwidth mean and walk ceiling
// unless set explicitly.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
RunConfig default_config();

// Emits every key at its current value; parsing the dump reproduces the
// config exactly.
std::string dump_config(const RunConfig& config);

}  // namespace vasim

#endif  // VASIM_CONFIG_HPP_
