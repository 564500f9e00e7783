#ifndef VASIM_CMAB_HPP_
#define VASIM_CMAB_HPP_

#include <array>
#include <cstdint>
#include <string>

#include "vasim/env.hpp"
#include "vasim/rng.hpp"

namespace vasim {

// The four bandit contexts: block information density and slot bandwidth,
// each compared against its running average.
enum class Context : int {
  HighDensityHighBandwidth = 0,
  LowDensityHighBandwidth = 1,
  HighDensityLowBandwidth = 2,
  LowDensityLowBandwidth = 3,
};

constexpr int kContextCount = 4;
constexpr int kConfigCount = kDetectModelCount * kResolutionCount;  // 9 arms

// Arm order: (x,640),(x,480),(x,320),(l,640),... — ties in the gain table
// resolve toward the front of this list.
inline int config_index(const BlockConfig& cfg) {
  return static_cast<int>(cfg.model) * kResolutionCount + static_cast<int>(cfg.resolution);
}

inline BlockConfig config_from_index(int index) {
  return BlockConfig{static_cast<DetectModel>(index / kResolutionCount),
                     static_cast<Resolution>(index % kResolutionCount)};
}

struct CmabParams {
  double xi_density = 0.1;    // EMA weight for block information density
  double xi_bandwidth = 0.1;  // EMA weight for slot bandwidth
  double phi = 0.1;           // gain-estimate decay
  double epsilon = 0.3;       // exploration rate during training
  double init_density = 3.0;
  double init_bandwidth = 10.0;  // the bandwidth trace mean
};

// Four independent epsilon-greedy bandits over the nine (model, resolution)
// arms, sharing the EMA statistics that define the contexts.
class CmabState {
 public:
  CmabState() : CmabState(CmabParams{}) {}
  explicit CmabState(const CmabParams& params);

  // HI iff n strictly above the density average, HB iff b strictly above the
  // bandwidth average; equality falls to the low side.
  Context classify_context(double n, double b) const;

  // E_i <- xi1*n + (1-xi1)*E_i (once per offloaded block) and
  // E_b <- xi2*b + (1-xi2)*E_b (once per offloading slot).
  void update_density_average(double n);
  void update_bandwidth_average(double b);

  // Epsilon-greedy arm choice for one block. One rng draw for the branch,
  // one more when exploring.
  BlockConfig select_config(Context context, double epsilon, Rng& rng) const;

  // Q[e,g] <- Q[e,g] + phi*(R - Q[e,g]) on the (context, config) pair that
  // was actually played; only that cell changes.
  void update_estimate(Context context, const BlockConfig& config, double reward);

  double gain(Context context, int config) const {
    return q_[static_cast<int>(context)][config];
  }
  std::uint64_t pulls(Context context, int config) const {
    return pulls_[static_cast<int>(context)][config];
  }
  double density_average() const { return avg_density_; }
  double bandwidth_average() const { return avg_bandwidth_; }
  const CmabParams& params() const { return params_; }

  void save(const std::string& path) const;
  static CmabState load(const std::string& path);

  bool operator==(const CmabState& other) const;

 private:
  CmabParams params_;
  std::array<std::array<double, kConfigCount>, kContextCount> q_{};
  std::array<std::array<std::uint64_t, kConfigCount>, kContextCount> pulls_{};
  double avg_density_;
  double avg_bandwidth_;
};

// Warm-up training pass: every slot offloads with ROI extraction, each block
// classified and configured by the bandit, estimates updated with the slot
// reward. Wraps around the trace when slots exceeds its length.
CmabState pretrain_cmab(const Trace& trace, const SystemParams& sys,
                        const CmabParams& params, int slots, std::uint64_t seed);

}  // namespace vasim

#endif  // VASIM_CMAB_HPP_
