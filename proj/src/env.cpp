#include "vasim/env.hpp"

#include <cmath>
#include <stdexcept>

namespace vasim {

namespace {

void check_decision(const SceneSlot& slot, const Decision& decision) {
  if (!decision.offload) {
    if (!decision.block_configs.empty()) {
      throw std::invalid_argument("decision: local processing carries no block configs");
    }
    return;
  }
  const std::size_t expected = decision.roi ? slot.blocks.size() : 1;
  if (decision.block_configs.size() != expected) {
    throw std::invalid_argument(
        "decision: expected " + std::to_string(expected) + " block configs, got " +
        std::to_string(decision.block_configs.size()));
  }
}

double block_payload_mb(const SceneSlot& slot, const Decision& decision,
                        const SystemParams& params, std::size_t i) {
  const double unit = params.data_scale * params.tau;
  if (decision.roi) {
    return unit * slot.blocks[i].pixel_fraction *
           static_cast<double>(resolution_pixels(decision.block_configs[i].resolution));
  }
  return unit * static_cast<double>(resolution_pixels(decision.block_configs[0].resolution));
}

}  // namespace

double offload_data_size(const SceneSlot& slot, const Decision& decision,
                         const SystemParams& params) {
  check_decision(slot, decision);
  if (!decision.offload) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < decision.block_configs.size(); ++i) {
    total += block_payload_mb(slot, decision, params, i);
  }
  return total;
}

StepOutcome total_latency(const Decision& decision, const SceneSlot& slot,
                          double bandwidth, const SystemParams& params) {
  if (bandwidth <= 0.0) throw std::invalid_argument("total_latency: bandwidth must be > 0");
  check_decision(slot, decision);

  StepOutcome out;
  const double raw_mb = params.raw_frame_mb(slot);

  if (!decision.offload) {
    out.l_local = params.u_track[static_cast<int>(decision.track)] * raw_mb / params.f_device;
    out.l_total = out.l_local;
    return out;
  }

  out.data_mb = offload_data_size(slot, decision, params);
  out.l_roi = decision.roi ? params.u_roi * raw_mb / params.f_device : 0.0;
  out.l_dnn = params.u_dnn * raw_mb / params.f_device;
  out.l_trans = out.data_mb / bandwidth;
  for (std::size_t i = 0; i < decision.block_configs.size(); ++i) {
    const BlockConfig& cfg = decision.block_configs[i];
    out.l_edge += params.u_infer[static_cast<int>(cfg.model)][static_cast<int>(cfg.resolution)] *
                  block_payload_mb(slot, decision, params, i) / params.f_edge;
  }
  out.l_total = out.l_roi + out.l_dnn + out.l_trans + out.l_edge;
  return out;
}

double frame_accuracy(const Decision& decision, const SceneSlot& slot,
                      const ObservationState& obs, const SystemParams& params) {
  check_decision(slot, decision);

  if (decision.offload) {
    double sum = 0.0;
    for (const BlockConfig& cfg : decision.block_configs) {
      sum += params.acc_detect[static_cast<int>(cfg.model)][static_cast<int>(cfg.resolution)];
    }
    const double mean = sum / static_cast<double>(decision.block_configs.size());
    return decision.roi ? params.roi_penalty * mean : mean;
  }

  const double staleness = std::pow(params.track_decay, obs.p + 1);
  switch (decision.track) {
    case TrackMode::Kcf:
      return params.acc_track_kcf * staleness;
    case TrackMode::Csrt:
      return params.acc_track_csrt * staleness;
    case TrackMode::Skip:
    default:
      // Reuse of the last detection results; degrades with dissimilarity.
      return std::pow(slot.hash_similarity, params.skip_exponent) * staleness;
  }
}

bool success_flag(double l_total, double acc, const SystemParams& params) {
  return l_total <= params.l_max && acc >= params.acc_threshold;
}

double slot_reward(double acc, double l_total, const SystemParams& params) {
  const double effective_acc = l_total <= params.l_max ? acc : 0.0;
  const double slack = std::max((params.l_max - l_total) / params.l_max, 0.0);
  return effective_acc + params.lambda * slack;
}

StepOutcome step(const SceneSlot& slot, double bandwidth,
                 const ObservationState& obs, const Decision& decision,
                 const SystemParams& params, StateUpdate* next_state) {
  StepOutcome out = total_latency(decision, slot, bandwidth, params);
  const double raw_acc = frame_accuracy(decision, slot, obs, params);
  out.acc = out.l_total <= params.l_max ? raw_acc : 0.0;
  out.success = success_flag(out.l_total, out.acc, params);
  out.reward = slot_reward(raw_acc, out.l_total, params);

  if (next_state != nullptr) {
    if (decision.offload && out.success) {
      next_state->c = slot.true_object_count;
      next_state->p = 0;
    } else {
      next_state->c = obs.c;
      next_state->p = obs.p + 1;
    }
  }
  return out;
}

double episode_utility(const std::vector<StepOutcome>& outcomes, double eta) {
  if (outcomes.empty()) throw std::invalid_argument("episode_utility: empty episode");
  int successes = 0;
  double acc_sum = 0.0;
  for (const StepOutcome& out : outcomes) {
    if (out.success) {
      successes += 1;
      acc_sum += out.acc;
    }
  }
  const double rate = static_cast<double>(successes) / static_cast<double>(outcomes.size());
  if (successes == 0) return rate;
  return rate + eta * acc_sum / static_cast<double>(successes);
}

AnalyticsEnv::AnalyticsEnv(const Trace& trace, const SystemParams& params)
    : trace_(&trace), params_(params) {
  if (trace.slots.empty()) throw std::invalid_argument("AnalyticsEnv: empty trace");
  if (trace.slots.size() != trace.bandwidth.samples.size())
    throw std::invalid_argument("AnalyticsEnv: scene/bandwidth length mismatch");
  reset();
}

ObservationState AnalyticsEnv::reset() {
  cursor_ = 0;
  obs_.h = trace_->slots[0].hash_similarity;
  obs_.b = trace_->bandwidth.samples[0];
  obs_.c = 0;
  obs_.p = 0;
  return obs_;
}

const SceneSlot& AnalyticsEnv::current_slot() const {
  if (done()) throw std::logic_error("AnalyticsEnv: stepped past end of trace");
  return trace_->slots[cursor_];
}

double AnalyticsEnv::current_bandwidth() const {
  if (done()) throw std::logic_error("AnalyticsEnv: stepped past end of trace");
  return trace_->bandwidth.samples[cursor_];
}

StepOutcome AnalyticsEnv::step(const Decision& decision) {
  const SceneSlot& slot = current_slot();
  StateUpdate next;
  StepOutcome out = vasim::step(slot, current_bandwidth(), obs_, decision, params_, &next);
  cursor_ += 1;
  obs_.c = next.c;
  obs_.p = next.p;
  if (!done()) {
    obs_.h = trace_->slots[cursor_].hash_similarity;
    obs_.b = trace_->bandwidth.samples[cursor_];
  }
  return out;
}

void AnalyticsEnv::seed_tracking_state(int object_count) {
  obs_.c = object_count;
  obs_.p = 0;
}

}  // namespace vasim
