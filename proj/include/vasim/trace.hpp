#ifndef VASIM_TRACE_HPP_
#define VASIM_TRACE_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace vasim {

// One region-of-interest block inside a frame. pixel_fraction is the share
// of the native frame's pixels the block covers; info_density is the number
// of bounding boxes inside it.
struct BlockSpec {
  double pixel_fraction = 0.0;  // in (0,1]
  int info_density = 0;         // >= 0
};

// Per-slot ground truth for one synthetic frame.
struct SceneSlot {
  int slot_index = 0;
  double hash_similarity = 1.0;  // in [0,1], similarity to previous frame
  int true_object_count = 0;
  std::vector<BlockSpec> blocks;     // at least one block
  long full_frame_pixels = 307200;   // native 640x480 frame
};

// Channel capacity series, one sample per slot (MB/s).
struct BandwidthTrace {
  std::vector<double> samples;
  double rho = 10.0;    // mean of the generating normal
  double sigma = 5.0;   // stddev of the generating normal
  double b_min = 0.5;   // lower clamp; every sample >= b_min
};

// A scene trace paired with its bandwidth series (equal length).
struct Trace {
  std::vector<SceneSlot> slots;
  BandwidthTrace bandwidth;

  std::size_t size() const { return slots.size(); }
};

struct SceneGenParams {
  int max_objects = 12;       // object-count walk reflects at [0, max_objects]
  double step_prob = 0.2;     // P(walk step -1) = P(+1) = step_prob
  double motion_mean = 0.15;  // per-slot motion ~ clamp(N(mean, std), 0, 1)
  double motion_std = 0.15;
  int cluster_size = 3;       // objects per ROI block before rounding
  long full_frame_pixels = 307200;
};

// Generates T correlated scene slots. Object counts follow a reflected
// +-1 random walk; hash similarity is 1 minus a clamped Gaussian motion
// sample; objects are split evenly into round(count / cluster_size) blocks.
// Deterministic for a fixed (params, seed).
std::vector<SceneSlot> generate_scene_trace(const SceneGenParams& params,
                                            std::uint64_t seed, int slot_count);

// T i.i.d. draws from N(rho, sigma) clamped below at b_min.
BandwidthTrace generate_bandwidth_trace(double rho, double sigma, double b_min,
                                        std::uint64_t seed, int slot_count);

Trace generate_trace(const SceneGenParams& params, double rho, double sigma,
                     double b_min, std::uint64_t seed, int slot_count);

// Splits into a contiguous train prefix of floor(train_fraction * T) slots
// and the remaining test suffix; both halves are re-indexed from 0.
// Requires 0 < train_fraction < 1 and both halves non-empty.
std::pair<Trace, Trace> split_trace(const Trace& trace, double train_fraction);

// CSV persistence. Layout: a '#' metadata line carrying the trace-level
// fields (rho, sigma, b_min, frame_pixels), the header row
// `slot,h,objects,bandwidth,blocks`, then one row per slot where `blocks`
// is a semicolon-separated list of pixel_fraction:density pairs. Reals are
// written with %.17g so read(write(x)) is exact.
void write_trace(const Trace& trace, const std::string& path);
Trace read_trace(const std::string& path);

// Throws std::invalid_argument naming the offending slot if any invariant
// fails: h in [0,1], at least one block, fractions in (0,1] summing to <= 1,
// densities >= 0 summing to the object count, bandwidth >= b_min.
void validate_trace(const Trace& trace);

}  // namespace vasim

#endif  // VASIM_TRACE_HPP_
