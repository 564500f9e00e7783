#include "vasim/cmab.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace vasim {

CmabState::CmabState(const CmabParams& params)
    : params_(params),
      avg_density_(params.init_density),
      avg_bandwidth_(params.init_bandwidth) {
  if (params.xi_density < 0.0 || params.xi_density > 1.0)
    throw std::invalid_argument("cmab: xi_density must be in [0,1]");
  if (params.xi_bandwidth < 0.0 || params.xi_bandwidth > 1.0)
    throw std::invalid_argument("cmab: xi_bandwidth must be in [0,1]");
  if (params.phi <= 0.0 || params.phi > 1.0)
    throw std::invalid_argument("cmab: phi must be in (0,1]");
  if (params.epsilon < 0.0 || params.epsilon > 1.0)
    throw std::invalid_argument("cmab: epsilon must be in [0,1]");
  if (params.init_bandwidth <= 0.0)
    throw std::invalid_argument("cmab: init_bandwidth must be > 0");
  if (params.init_density < 0.0)
    throw std::invalid_argument("cmab: init_density must be >= 0");
}

Context CmabState::classify_context(double n, double b) const {
  const bool high_density = n > avg_density_;
  const bool high_bandwidth = b > avg_bandwidth_;
  if (high_density && high_bandwidth) return Context::HighDensityHighBandwidth;
  if (!high_density && high_bandwidth) return Context::LowDensityHighBandwidth;
  if (high_density) return Context::HighDensityLowBandwidth;
  return Context::LowDensityLowBandwidth;
}

void CmabState::update_density_average(double n) {
  avg_density_ = params_.xi_density * n + (1.0 - params_.xi_density) * avg_density_;
}

void CmabState::update_bandwidth_average(double b) {
  avg_bandwidth_ = params_.xi_bandwidth * b + (1.0 - params_.xi_bandwidth) * avg_bandwidth_;
}

BlockConfig CmabState::select_config(Context context, double epsilon, Rng& rng) const {
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("select_config: epsilon must be in [0,1]");
  if (rng.uniform01() < epsilon) {
    return config_from_index(static_cast<int>(rng.uniform_int(kConfigCount)));
  }
  const auto& row = q_[static_cast<int>(context)];
  int best = 0;
  for (int g = 1; g < kConfigCount; ++g) {
    if (row[g] > row[best]) best = g;  // ties keep the lowest arm index
  }
  return config_from_index(best);
}

void CmabState::update_estimate(Context context, const BlockConfig& config,
                                double reward) {
  const int e = static_cast<int>(context);
  const int g = config_index(config);
  q_[e][g] += params_.phi * (reward - q_[e][g]);
  pulls_[e][g] += 1;
}

bool CmabState::operator==(const CmabState& other) const {
  return q_ == other.q_ && pulls_ == other.pulls_ &&
         avg_density_ == other.avg_density_ && avg_bandwidth_ == other.avg_bandwidth_;
}

void CmabState::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cmab save: cannot open " + path);
  char buf[40];
  out << "vasim-cmab 1\n";
  std::snprintf(buf, sizeof(buf), "%.17g", avg_density_);
  out << "avg_density " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", avg_bandwidth_);
  out << "avg_bandwidth " << buf << "\n";
  out << "q";
  for (int e = 0; e < kContextCount; ++e) {
    for (int g = 0; g < kConfigCount; ++g) {
      std::snprintf(buf, sizeof(buf), "%.17g", q_[e][g]);
      out << ' ' << buf;
    }
  }
  out << "\npulls";
  for (int e = 0; e < kContextCount; ++e)
    for (int g = 0; g < kConfigCount; ++g) out << ' ' << pulls_[e][g];
  out << "\n";
  if (!out) throw std::runtime_error("cmab save: failed writing " + path);
}

CmabState CmabState::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cmab load: cannot open " + path);
  std::string magic, key;
  int version = 0;
  in >> magic >> version;
  if (magic != "vasim-cmab" || version != 1)
    throw std::runtime_error("cmab load: unrecognized checkpoint format in " + path);

  CmabState state;
  in >> key >> state.avg_density_;
  if (!in || key != "avg_density") throw std::runtime_error("cmab load: bad avg_density in " + path);
  in >> key >> state.avg_bandwidth_;
  if (!in || key != "avg_bandwidth") throw std::runtime_error("cmab load: bad avg_bandwidth in " + path);
  in >> key;
  if (!in || key != "q") throw std::runtime_error("cmab load: bad q table in " + path);
  for (int e = 0; e < kContextCount; ++e)
    for (int g = 0; g < kConfigCount; ++g) in >> state.q_[e][g];
  in >> key;
  if (!in || key != "pulls") throw std::runtime_error("cmab load: bad pull counts in " + path);
  for (int e = 0; e < kContextCount; ++e)
    for (int g = 0; g < kConfigCount; ++g) in >> state.pulls_[e][g];
  if (!in) throw std::runtime_error("cmab load: truncated checkpoint in " + path);
  return state;
}

CmabState pretrain_cmab(const Trace& trace, const SystemParams& sys,
                        const CmabParams& params, int slots, std::uint64_t seed) {
  if (slots < 1) throw std::invalid_argument("pretrain_cmab: slots must be >= 1");
  if (trace.slots.empty()) throw std::invalid_argument("pretrain_cmab: empty trace");

  CmabState state(params);
  Rng rng(seed);
  ObservationState obs;
  obs.c = trace.slots[0].true_object_count;
  obs.p = 0;

  for (int step_index = 0; step_index < slots; ++step_index) {
    const std::size_t i = static_cast<std::size_t>(step_index) % trace.slots.size();
    const SceneSlot& slot = trace.slots[i];
    const double bandwidth = trace.bandwidth.samples[i];

    Decision decision;
    decision.offload = true;
    decision.roi = true;
    std::vector<std::pair<Context, BlockConfig>> played;
    played.reserve(slot.blocks.size());
    for (const BlockSpec& block : slot.blocks) {
      const Context context = state.classify_context(block.info_density, bandwidth);
      const BlockConfig config = state.select_config(context, params.epsilon, rng);
      decision.block_configs.push_back(config);
      played.emplace_back(context, config);
    }

    obs.h = slot.hash_similarity;
    obs.b = bandwidth;
    StateUpdate next;
    const StepOutcome outcome = step(slot, bandwidth, obs, decision, sys, &next);

    for (const auto& [context, config] : played) {
      state.update_estimate(context, config, outcome.reward);
    }
    for (const BlockSpec& block : slot.blocks) {
      state.update_density_average(block.info_density);
    }
    state.update_bandwidth_average(bandwidth);

    obs.c = next.c;
    obs.p = next.p;
  }
  return state;
}

}  // namespace vasim
