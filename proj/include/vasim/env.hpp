#ifndef VASIM_ENV_HPP_
#define VASIM_ENV_HPP_

#include <array>
#include <cstddef>
#include <vector>

#include "vasim/trace.hpp"

namespace vasim {

enum class TrackMode : int { Skip = 0, Kcf = 1, Csrt = 2 };
enum class DetectModel : int { Yolov5x = 0, Yolov5l = 1, Yolov5m = 2 };
enum class Resolution : int { R640 = 0, R480 = 1, R320 = 2 };

constexpr int kDetectModelCount = 3;
constexpr int kResolutionCount = 3;

// Full-frame pixel counts of the offloading resolutions (4:3 frames).
constexpr long kResolutionPixels[kResolutionCount] = {307200, 172800, 76800};

inline long resolution_pixels(Resolution r) {
  return kResolutionPixels[static_cast<int>(r)];
}

// Per-block inference configuration: detection model and offload resolution.
struct BlockConfig {
  DetectModel model = DetectModel::Yolov5x;
  Resolution resolution = Resolution::R640;
};

// One frame's processing decision. Exactly one branch is active: when
// offload is false the frame stays local under `track`; when offload is
// true the frame is transmitted, ROI-extracted or whole, with one
// BlockConfig per transmitted block (a whole frame counts as one block).
struct Decision {
  bool offload = false;
  bool roi = false;  // meaningful only when offload
  TrackMode track = TrackMode::Skip;
  std::vector<BlockConfig> block_configs;
};

// Everything the environment needs to price a decision.
struct SystemParams {
  double f_device = 1.0;
  double f_edge = 2.0;  // edge:device compute ratio 2:1
  std::array<double, 3> u_track = {0.0, 0.02, 0.10};  // Skip, KCF, CSRT
  double u_roi = 0.02;
  double u_dnn = 0.01;  // lightweight pre-detection
  // Inference intensity (compute-seconds per MB), [model][resolution].
  // Ordered so a better model or higher resolution never costs less.
  std::array<std::array<double, 3>, 3> u_infer = {{
      {0.20, 0.19, 0.18},  // Yolov5x at 640/480/320
      {0.16, 0.15, 0.14},  // Yolov5l
      {0.12, 0.11, 0.10},  // Yolov5m
  }};
  double tau = 6.25e-4;      // MB per pixel
  double data_scale = 0.03125;  // calibration so a full 640p frame is 6 MB
  double l_max = 1.0;        // slot length == per-frame deadline, seconds
  // Detection accuracy table, [model][resolution]; better never worse.
  std::array<std::array<double, 3>, 3> acc_detect = {{
      {0.90, 0.85, 0.78},
      {0.86, 0.81, 0.74},
      {0.82, 0.77, 0.70},
  }};
  double acc_track_kcf = 0.68;
  double acc_track_csrt = 0.78;
  double track_decay = 0.97;   // staleness decay per slot since last offload
  double skip_exponent = 2.0;  // Skip accuracy = h^skip_exponent * decay^(p+1)
  double roi_penalty = 0.95;   // ROI extraction may drop context
  double acc_threshold = 0.5;  // below this a frame does not count as processed
  double lambda = 0.5;         // latency-slack weight in the slot reward
  double eta = 1.0;            // accuracy weight in the episode utility

  // Raw (native-resolution) frame size in MB; local tracking and
  // pre-detection run on it before any resizing.
  double raw_frame_mb(const SceneSlot& slot) const {
    return data_scale * tau * static_cast<double>(slot.full_frame_pixels);
  }
};

// Latency breakdown plus scoring for one slot. Unused components of the
// inactive branch are zero, so l_total always equals
// roi + dnn + trans + edge + local.
struct StepOutcome {
  double l_roi = 0.0;
  double l_dnn = 0.0;
  double l_trans = 0.0;
  double l_edge = 0.0;
  double l_local = 0.0;
  double l_total = 0.0;
  double acc = 0.0;      // effective accuracy; 0 when the deadline is missed
  bool success = false;  // q_t
  double reward = 0.0;
  double data_mb = 0.0;  // transmitted payload; 0 for local slots
};

// The agent-visible state: similarity, bandwidth, last detected object
// count, and consecutive slots since the last successful offload.
struct ObservationState {
  double h = 1.0;
  double b = 0.0;
  int c = 0;
  int p = 0;
};

// Transmitted payload in MB for the decision's blocks.
// ROI: data_scale * tau * sum_i fraction_i * pixels(r_i) over scene blocks;
// full frame: data_scale * tau * pixels(r) for the single config.
double offload_data_size(const SceneSlot& slot, const Decision& decision,
                         const SystemParams& params);

// Fills the latency fields (and data_mb) of a StepOutcome. Local slots cost
// u_track[k] * raw_mb / f_device; offload slots cost
// roi + pre-detect + transmission + per-block edge inference.
StepOutcome total_latency(const Decision& decision, const SceneSlot& slot,
                          double bandwidth, const SystemParams& params);

// Accuracy of the decision before any deadline handling: block-mean detector
// accuracy (ROI-penalized when extracting) for offloads, decayed tracker or
// similarity-driven reuse accuracy for local modes.
double frame_accuracy(const Decision& decision, const SceneSlot& slot,
                      const ObservationState& obs, const SystemParams& params);

// q = 1 iff the frame finished inside the deadline with acceptable accuracy
// (both bounds inclusive).
bool success_flag(double l_total, double acc, const SystemParams& params);

// R = acc + lambda * max((l_max - l_total) / l_max, 0), with acc forced to 0
// when the deadline is missed (no result returns). Always >= 0.
double slot_reward(double acc, double l_total, const SystemParams& params);

// Observation fields that carry over to the next slot.
struct StateUpdate {
  int c = 0;
  int p = 0;
};

// Evaluates one slot: latency, accuracy, success, reward, and the tracking
// state for the next observation (c/p reset only on a successful offload).
StepOutcome step(const SceneSlot& slot, double bandwidth,
                 const ObservationState& obs, const Decision& decision,
                 const SystemParams& params, StateUpdate* next_state);

// Episode utility: success_count/T + eta * sum(acc over successes)/success_count,
// with the accuracy term defined as 0 when nothing succeeded.
double episode_utility(const std::vector<StepOutcome>& outcomes, double eta);

// Sequential walk over a trace that maintains the observation between slots.
class AnalyticsEnv {
 public:
  AnalyticsEnv(const Trace& trace, const SystemParams& params);

  ObservationState reset();
  const ObservationState& observation() const { return obs_; }
  const SceneSlot& current_slot() const;
  double current_bandwidth() const;
  bool done() const { return cursor_ >= trace_->slots.size(); }
  std::size_t cursor() const { return cursor_; }

  // Steps the current slot and advances. Returns the outcome; the next
  // observation is available via observation() unless the trace ended.
  StepOutcome step(const Decision& decision);

  // Overrides the tracking state, used by the warm-up offload that
  // initializes the last detection results before an episode starts.
  void seed_tracking_state(int object_count);

  const SystemParams& params() const { return params_; }

 private:
  const Trace* trace_;
  SystemParams params_;
  ObservationState obs_;
  std::size_t cursor_ = 0;
};

}  // namespace vasim

#endif  // VASIM_ENV_HPP_
