#include "vasim/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "vasim/rng.hpp"

namespace vasim {

namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_real(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("trace: bad numeric field '" + s + "' in " + what);
  }
  if (pos != s.size()) {
    throw std::invalid_argument("trace: trailing junk in numeric field '" + s + "' in " + what);
  }
  return v;
}

long parse_long(const std::string& s, const std::string& what) {
  const double v = parse_real(s, what);
  const long n = static_cast<long>(v);
  if (static_cast<double>(n) != v) {
    throw std::invalid_argument("trace: expected integer field '" + s + "' in " + what);
  }
  return n;
}

std::vector<std::string> split_on(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<SceneSlot> generate_scene_trace(const SceneGenParams& params,
                                            std::uint64_t seed, int slot_count) {
  if (slot_count < 1) throw std::invalid_argument("generate_scene_trace: slot_count must be >= 1");
  if (params.max_objects < 1) throw std::invalid_argument("generate_scene_trace: max_objects must be >= 1");
  if (params.cluster_size < 1) throw std::invalid_argument("generate_scene_trace: cluster_size must be >= 1");
  if (params.step_prob < 0.0 || params.step_prob > 0.5)
    throw std::invalid_argument("generate_scene_trace: step_prob must be in [0, 0.5]");
  if (params.motion_std < 0.0) throw std::invalid_argument("generate_scene_trace: motion_std must be >= 0");
  if (params.full_frame_pixels < 1)
    throw std::invalid_argument("generate_scene_trace: full_frame_pixels must be >= 1");

  Rng rng(seed);
  std::vector<SceneSlot> slots;
  slots.reserve(static_cast<std::size_t>(slot_count));

  int count = params.max_objects / 2;
  for (int t = 0; t < slot_count; ++t) {
    if (t > 0) {
      // Reflected birth-death walk on {0..max_objects}.
      const double u = rng.uniform01();
      if (u < params.step_prob) {
        count -= 1;
      } else if (u < 2.0 * params.step_prob) {
        count += 1;
      }
      count = std::clamp(count, 0, params.max_objects);
    }

    const double motion =
        std::clamp(rng.normal(params.motion_mean, params.motion_std), 0.0, 1.0);

    SceneSlot slot;
    slot.slot_index = t;
    slot.hash_similarity = 1.0 - motion;
    slot.true_object_count = count;
    slot.full_frame_pixels = params.full_frame_pixels;

    const int block_count = std::max(
        1, static_cast<int>(std::lround(static_cast<double>(count) /
                                        static_cast<double>(params.cluster_size))));
    const int base = count / block_count;
    const int extra = count % block_count;
    slot.blocks.reserve(static_cast<std::size_t>(block_count));
    double fraction_sum = 0.0;
    for (int i = 0; i < block_count; ++i) {
      BlockSpec block;
      block.info_density = base + (i < extra ? 1 : 0);
      block.pixel_fraction =
          std::clamp(0.04 * block.info_density + 0.02, 0.02, 0.35);
      fraction_sum += block.pixel_fraction;
      slot.blocks.push_back(block);
    }
    if (fraction_sum > 1.0) {
      // Extreme parameterizations could over-cover the frame; rescale so the
      // block-area invariant holds for any inputs.
      for (auto& block : slot.blocks) block.pixel_fraction /= fraction_sum;
    }
    slots.push_back(std::move(slot));
  }
  return slots;
}

BandwidthTrace generate_bandwidth_trace(double rho, double sigma, double b_min,
                                        std::uint64_t seed, int slot_count) {
  if (slot_count < 1) throw std::invalid_argument("generate_bandwidth_trace: slot_count must be >= 1");
  if (rho <= 0.0) throw std::invalid_argument("generate_bandwidth_trace: rho must be > 0");
  if (sigma < 0.0) throw std::invalid_argument("generate_bandwidth_trace: sigma must be >= 0");
  if (b_min <= 0.0 || b_min >= rho)
    throw std::invalid_argument("generate_bandwidth_trace: need 0 < b_min < rho");

  Rng rng(seed);
  BandwidthTrace trace;
  trace.rho = rho;
  trace.sigma = sigma;
  trace.b_min = b_min;
  trace.samples.reserve(static_cast<std::size_t>(slot_count));
  for (int t = 0; t < slot_count; ++t) {
    trace.samples.push_back(std::max(rng.normal(rho, sigma), b_min));
  }
  return trace;
}

Trace generate_trace(const SceneGenParams& params, double rho, double sigma,
                     double b_min, std::uint64_t seed, int slot_count) {
  Trace trace;
  // Independent streams so scene and bandwidth draws cannot interleave.
  trace.slots = generate_scene_trace(params, seed, slot_count);
  trace.bandwidth = generate_bandwidth_trace(rho, sigma, b_min, seed + 0x9e3779b97f4a7c15ull,
                                             slot_count);
  return trace;
}

std::pair<Trace, Trace> split_trace(const Trace& trace, double train_fraction) {
  if (trace.slots.size() != trace.bandwidth.samples.size())
    throw std::invalid_argument("split_trace: scene/bandwidth length mismatch");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split_trace: train_fraction must be in (0,1)");

  const std::size_t total = trace.slots.size();
  const std::size_t train_len =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(total)));
  if (train_len == 0 || train_len == total)
    throw std::invalid_argument("split_trace: split produces an empty segment");

  auto take = [&](std::size_t begin, std::size_t end) {
    Trace part;
    part.bandwidth.rho = trace.bandwidth.rho;
    part.bandwidth.sigma = trace.bandwidth.sigma;
    part.bandwidth.b_min = trace.bandwidth.b_min;
    part.slots.reserve(end - begin);
    part.bandwidth.samples.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      SceneSlot slot = trace.slots[i];
      slot.slot_index = static_cast<int>(i - begin);
      part.slots.push_back(std::move(slot));
      part.bandwidth.samples.push_back(trace.bandwidth.samples[i]);
    }
    return part;
  };
  return {take(0, train_len), take(train_len, total)};
}

void validate_trace(const Trace& trace) {
  if (trace.slots.empty()) throw std::invalid_argument("trace: empty trace");
  if (trace.slots.size() != trace.bandwidth.samples.size())
    throw std::invalid_argument("trace: scene/bandwidth length mismatch");
  if (trace.bandwidth.b_min <= 0.0) throw std::invalid_argument("trace: b_min must be > 0");

  for (std::size_t i = 0; i < trace.slots.size(); ++i) {
    const SceneSlot& slot = trace.slots[i];
    const std::string where = "slot " + std::to_string(i);
    if (slot.hash_similarity < 0.0 || slot.hash_similarity > 1.0)
      throw std::invalid_argument("trace: h out of [0,1] at " + where);
    if (slot.true_object_count < 0)
      throw std::invalid_argument("trace: negative object count at " + where);
    if (slot.blocks.empty())
      throw std::invalid_argument("trace: no blocks at " + where);
    if (slot.full_frame_pixels < 1)
      throw std::invalid_argument("trace: non-positive frame pixels at " + where);
    double fraction_sum = 0.0;
    int density_sum = 0;
    for (const BlockSpec& block : slot.blocks) {
      if (block.pixel_fraction <= 0.0 || block.pixel_fraction > 1.0)
        throw std::invalid_argument("trace: pixel_fraction out of (0,1] at " + where);
      if (block.info_density < 0)
        throw std::invalid_argument("trace: negative info_density at " + where);
      fraction_sum += block.pixel_fraction;
      density_sum += block.info_density;
    }
    if (fraction_sum > 1.0 + 1e-12)
      throw std::invalid_argument("trace: pixel fractions exceed 1 at " + where);
    if (density_sum != slot.true_object_count)
      throw std::invalid_argument("trace: block densities do not sum to object count at " + where);
    if (trace.bandwidth.samples[i] < trace.bandwidth.b_min)
      throw std::invalid_argument("trace: bandwidth below b_min at " + where);
  }
}

void write_trace(const Trace& trace, const std::string& path) {
  validate_trace(trace);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace: cannot open " + path);

  out << "# rho=" << fmt_real(trace.bandwidth.rho)
      << " sigma=" << fmt_real(trace.bandwidth.sigma)
      << " b_min=" << fmt_real(trace.bandwidth.b_min)
      << " frame_pixels=" << trace.slots.front().full_frame_pixels << "\n";
  out << "slot,h,objects,bandwidth,blocks\n";
  for (std::size_t i = 0; i < trace.slots.size(); ++i) {
    const SceneSlot& slot = trace.slots[i];
    out << slot.slot_index << ',' << fmt_real(slot.hash_similarity) << ','
        << slot.true_object_count << ',' << fmt_real(trace.bandwidth.samples[i]) << ',';
    for (std::size_t b = 0; b < slot.blocks.size(); ++b) {
      if (b > 0) out << ';';
      out << fmt_real(slot.blocks[b].pixel_fraction) << ':'
          << slot.blocks[b].info_density;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_trace: failed writing " + path);
}

Trace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_trace: cannot open " + path);

  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw std::invalid_argument("read_trace: missing metadata line in " + path);

  Trace trace;
  long frame_pixels = 0;
  {
    std::istringstream meta(line.substr(2));
    std::string field;
    while (meta >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("read_trace: malformed metadata field '" + field + "'");
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "rho") trace.bandwidth.rho = parse_real(value, "metadata");
      else if (key == "sigma") trace.bandwidth.sigma = parse_real(value, "metadata");
      else if (key == "b_min") trace.bandwidth.b_min = parse_real(value, "metadata");
      else if (key == "frame_pixels") frame_pixels = parse_long(value, "metadata");
      else throw std::invalid_argument("read_trace: unknown metadata key '" + key + "'");
    }
    if (frame_pixels <= 0)
      throw std::invalid_argument("read_trace: metadata missing frame_pixels");
  }

  if (!std::getline(in, line) || line != "slot,h,objects,bandwidth,blocks")
    throw std::invalid_argument("read_trace: missing header row in " + path);

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_on(line, ',');
    const std::string where = "row " + std::to_string(trace.slots.size());
    if (fields.size() != 5)
      throw std::invalid_argument("read_trace: expected 5 columns in " + where);

    SceneSlot slot;
    slot.slot_index = static_cast<int>(parse_long(fields[0], where));
    slot.hash_similarity = parse_real(fields[1], where);
    slot.true_object_count = static_cast<int>(parse_long(fields[2], where));
    slot.full_frame_pixels = frame_pixels;
    trace.bandwidth.samples.push_back(parse_real(fields[3], where));
    for (const std::string& pair : split_on(fields[4], ';')) {
      const auto colon = pair.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument("read_trace: malformed block '" + pair + "' in " + where);
      BlockSpec block;
      block.pixel_fraction = parse_real(pair.substr(0, colon), where);
      block.info_density = static_cast<int>(parse_long(pair.substr(colon + 1), where));
      slot.blocks.push_back(block);
    }
    if (slot.slot_index != static_cast<int>(trace.slots.size()))
      throw std::invalid_argument("read_trace: non-sequential slot index in " + where);
    trace.slots.push_back(std::move(slot));
  }

  validate_trace(trace);
  return trace;
}

}  // namespace vasim
