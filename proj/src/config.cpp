#include "vasim/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace vasim {

namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double to_real(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": not a number: '" + value + "'");
  }
  if (pos != value.size() || !std::isfinite(v))
    throw std::invalid_argument(key + ": not a finite number: '" + value + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& value) {
  const double v = to_real(key, value);
  const long long n = static_cast<long long>(v);
  if (static_cast<double>(n) != v)
    throw std::invalid_argument(key + ": expected an integer, got '" + value + "'");
  return n;
}

struct KeyHandler {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

// One registry drives parsing, validation, and dump-config, so the three can
// never disagree about the key set.
std::vector<KeyHandler> build_registry() {
  std::vector<KeyHandler> keys;

  auto real_key = [&keys](const std::string& key, std::function<double&(RunConfig&)> ref,
                          const std::string& domain, std::function<bool(double)> ok) {
    keys.push_back(KeyHandler{
        key,
        [key, ref, domain, ok](RunConfig& c, const std::string& value) {
          const double v = to_real(key, value);
          if (!ok(v)) throw std::invalid_argument(key + " must be in " + domain);
          ref(c) = v;
        },
        [ref](const RunConfig& c) { return fmt_real(ref(const_cast<RunConfig&>(c))); }});
  };
  auto int_key = [&keys](const std::string& key, std::function<int&(RunConfig&)> ref,
                         const std::string& domain, std::function<bool(long long)> ok) {
    keys.push_back(KeyHandler{
        key,
        [key, ref, domain, ok](RunConfig& c, const std::string& value) {
          const long long v = to_int(key, value);
          if (!ok(v)) throw std::invalid_argument(key + " must be in " + domain);
          ref(c) = static_cast<int>(v);
        },
        [ref](const RunConfig& c) {
          return std::to_string(ref(const_cast<RunConfig&>(c)));
        }});
  };
  auto seed_key = [&keys](const std::string& key, std::function<std::uint64_t&(RunConfig&)> ref) {
    keys.push_back(KeyHandler{
        key,
        [key, ref](RunConfig& c, const std::string& value) {
          try {
            ref(c) = std::stoull(value);
          } catch (const std::exception&) {
            throw std::invalid_argument(key + ": expected an unsigned integer");
          }
        },
        [ref](const RunConfig& c) {
          return std::to_string(ref(const_cast<RunConfig&>(c)));
        }});
  };

  auto positive = [](double v) { return v > 0.0; };
  auto nonneg = [](double v) { return v >= 0.0; };
  auto unit_closed = [](double v) { return v >= 0.0 && v <= 1.0; };
  auto unit_half_open = [](double v) { return v >= 0.0 && v < 1.0; };
  auto unit_open_closed = [](double v) { return v > 0.0 && v <= 1.0; };

  // --- trace generation ---
  int_key("trace.max_objects", [](RunConfig& c) -> int& { return c.trace.max_objects; },
          "[1, inf)", [](long long v) { return v >= 1; });
  real_key("trace.step_prob", [](RunConfig& c) -> double& { return c.trace.step_prob; },
           "[0, 0.5]", [](double v) { return v >= 0.0 && v <= 0.5; });
  real_key("trace.motion_mean", [](RunConfig& c) -> double& { return c.trace.motion_mean; },
           "[0, 1]", unit_closed);
  real_key("trace.motion_std", [](RunConfig& c) -> double& { return c.trace.motion_std; },
           "[0, inf)", nonneg);
  int_key("trace.cluster_size", [](RunConfig& c) -> int& { return c.trace.cluster_size; },
          "[1, inf)", [](long long v) { return v >= 1; });
  keys.push_back(KeyHandler{
      "trace.frame_pixels",
      [](RunConfig& c, const std::string& value) {
        const long long v = to_int("trace.frame_pixels", value);
        if (v < 1) throw std::invalid_argument("trace.frame_pixels must be in [1, inf)");
        c.trace.full_frame_pixels = static_cast<long>(v);
      },
      [](const RunConfig& c) { return std::to_string(c.trace.full_frame_pixels); }});

  // --- bandwidth model ---
  real_key("bandwidth.rho", [](RunConfig& c) -> double& { return c.rho; }, "(0, inf)",
           positive);
  real_key("bandwidth.sigma", [](RunConfig& c) -> double& { return c.sigma; }, "[0, inf)",
           nonneg);
  real_key("bandwidth.min", [](RunConfig& c) -> double& { return c.b_min; }, "(0, inf)",
           positive);

  // --- environment ---
  real_key("env.f_device", [](RunConfig& c) -> double& { return c.sys.f_device; },
           "(0, inf)", positive);
  real_key("env.f_edge", [](RunConfig& c) -> double& { return c.sys.f_edge; }, "(0, inf)",
           positive);
  real_key("env.u_track.kcf", [](RunConfig& c) -> double& { return c.sys.u_track[1]; },
           "[0, inf)", nonneg);
  real_key("env.u_track.csrt", [](RunConfig& c) -> double& { return c.sys.u_track[2]; },
           "[0, inf)", nonneg);
  real_key("env.u_roi", [](RunConfig& c) -> double& { return c.sys.u_roi; }, "[0, inf)",
           nonneg);
  real_key("env.u_dnn", [](RunConfig& c) -> double& { return c.sys.u_dnn; }, "[0, inf)",
           nonneg);

  const char* models[] = {"x", "l", "m"};
  const char* resolutions[] = {"640", "480", "320"};
  for (int m = 0; m < 3; ++m) {
    for (int r = 0; r < 3; ++r) {
      real_key("env.u_infer." + std::string(models[m]) + "." + resolutions[r],
               [m, r](RunConfig& c) -> double& { return c.sys.u_infer[m][r]; },
               "(0, inf)", positive);
      real_key("env.acc." + std::string(models[m]) + "." + resolutions[r],
               [m, r](RunConfig& c) -> double& { return c.sys.acc_detect[m][r]; },
               "(0, 1]", unit_open_closed);
    }
  }

  real_key("env.acc_track.kcf", [](RunConfig& c) -> double& { return c.sys.acc_track_kcf; },
           "(0, 1]", unit_open_closed);
  real_key("env.acc_track.csrt", [](RunConfig& c) -> double& { return c.sys.acc_track_csrt; },
           "(0, 1]", unit_open_closed);
  real_key("env.track_decay", [](RunConfig& c) -> double& { return c.sys.track_decay; },
           "(0, 1]", unit_open_closed);
  real_key("env.skip_exponent", [](RunConfig& c) -> double& { return c.sys.skip_exponent; },
           "(0, inf)", positive);
  real_key("env.roi_penalty", [](RunConfig& c) -> double& { return c.sys.roi_penalty; },
           "(0, 1]", unit_open_closed);
  real_key("env.acc_threshold", [](RunConfig& c) -> double& { return c.sys.acc_threshold; },
           "[0, 1)", unit_half_open);
  real_key("env.tau", [](RunConfig& c) -> double& { return c.sys.tau; }, "(0, inf)",
           positive);
  real_key("env.data_scale", [](RunConfig& c) -> double& { return c.sys.data_scale; },
           "(0, inf)", positive);
  real_key("env.l_max", [](RunConfig& c) -> double& { return c.sys.l_max; }, "(0, inf)",
           positive);
  real_key("env.lambda", [](RunConfig& c) -> double& { return c.sys.lambda; }, "[0, inf)",
           nonneg);
  real_key("env.eta", [](RunConfig& c) -> double& { return c.sys.eta; }, "(0, inf)",
           positive);

  // --- offloading agent ---
  real_key("ddqn.gamma", [](RunConfig& c) -> double& { return c.ddqn.gamma; }, "[0,1)",
           unit_half_open);
  real_key("ddqn.learning_rate", [](RunConfig& c) -> double& { return c.ddqn.learning_rate; },
           "(0, inf)", positive);
  int_key("ddqn.batch_size", [](RunConfig& c) -> int& { return c.ddqn.batch_size; },
          "[1, inf)", [](long long v) { return v >= 1; });
  int_key("ddqn.sync_period", [](RunConfig& c) -> int& { return c.ddqn.sync_period; },
          "[1, inf)", [](long long v) { return v >= 1; });
  real_key("ddqn.epsilon", [](RunConfig& c) -> double& { return c.ddqn.epsilon; }, "[0,1]",
           unit_closed);
  keys.push_back(KeyHandler{
      "ddqn.buffer_capacity",
      [](RunConfig& c, const std::string& value) {
        const long long v = to_int("ddqn.buffer_capacity", value);
        if (v < 1) throw std::invalid_argument("ddqn.buffer_capacity must be in [1, inf)");
        c.ddqn.buffer_capacity = static_cast<std::size_t>(v);
      },
      [](const RunConfig& c) { return std::to_string(c.ddqn.buffer_capacity); }});
  keys.push_back(KeyHandler{
      "ddqn.hidden_sizes",
      [](RunConfig& c, const std::string& value) {
        std::vector<int> sizes;
        std::istringstream stream(value);
        std::string item;
        while (std::getline(stream, item, ',')) {
          const long long v = to_int("ddqn.hidden_sizes", item);
          if (v < 1) throw std::invalid_argument("ddqn.hidden_sizes entries must be in [1, inf)");
          sizes.push_back(static_cast<int>(v));
        }
        if (sizes.empty()) throw std::invalid_argument("ddqn.hidden_sizes must list at least one layer");
        c.ddqn.hidden_sizes = std::move(sizes);
      },
      [](const RunConfig& c) {
        std::string out;
        for (std::size_t i = 0; i < c.ddqn.hidden_sizes.size(); ++i) {
          if (i > 0) out += ',';
          out += std::to_string(c.ddqn.hidden_sizes[i]);
        }
        return out;
      }});
  real_key("ddqn.stall_scale", [](RunConfig& c) -> double& { return c.ddqn.scale.stall; },
           "(0, inf)", positive);

  // --- configuration bandit ---
  real_key("cmab.xi_density", [](RunConfig& c) -> double& { return c.cmab.xi_density; },
           "[0,1]", unit_closed);
  real_key("cmab.xi_bandwidth", [](RunConfig& c) -> double& { return c.cmab.xi_bandwidth; },
           "[0,1]", unit_closed);
  real_key("cmab.phi", [](RunConfig& c) -> double& { return c.cmab.phi; }, "(0,1]",
           unit_open_closed);
  real_key("cmab.epsilon", [](RunConfig& c) -> double& { return c.cmab.epsilon; }, "[0,1]",
           unit_closed);
  real_key("cmab.init_density", [](RunConfig& c) -> double& { return c.cmab.init_density; },
           "[0, inf)", nonneg);
  real_key("cmab.init_bandwidth", [](RunConfig& c) -> double& { return c.cmab.init_bandwidth; },
           "(0, inf)", positive);

  // --- run shape ---
  int_key("run.slots", [](RunConfig& c) -> int& { return c.slots; }, "[2, inf)",
          [](long long v) { return v >= 2; });
  real_key("run.train_fraction", [](RunConfig& c) -> double& { return c.train_fraction; },
           "(0,1)", [](double v) { return v > 0.0 && v < 1.0; });
  int_key("run.passes", [](RunConfig& c) -> int& { return c.passes; }, "[0, inf)",
          [](long long v) { return v >= 0; });
  int_key("run.pretrain_slots", [](RunConfig& c) -> int& { return c.pretrain_slots; },
          "[1, inf)", [](long long v) { return v >= 1; });
  int_key("run.threads", [](RunConfig& c) -> int& { return c.threads; }, "[0, inf)",
          [](long long v) { return v >= 0; });

  seed_key("seed.trace", [](RunConfig& c) -> std::uint64_t& { return c.seed_trace; });
  seed_key("seed.pretrain", [](RunConfig& c) -> std::uint64_t& { return c.seed_pretrain; });
  seed_key("seed.train", [](RunConfig& c) -> std::uint64_t& { return c.seed_train; });
  seed_key("seed.eval", [](RunConfig& c) -> std::uint64_t& { return c.seed_eval; });
  keys.push_back(KeyHandler{
      "compare.seeds",
      [](RunConfig& c, const std::string& value) {
        std::vector<std::uint64_t> seeds;
        std::istringstream stream(value);
        std::string item;
        while (std::getline(stream, item, ',')) {
          try {
            seeds.push_back(std::stoull(item));
          } catch (const std::exception&) {
            throw std::invalid_argument("compare.seeds: expected comma-separated unsigned integers");
          }
        }
        if (seeds.empty()) throw std::invalid_argument("compare.seeds must list at least one seed");
        c.compare_seeds = std::move(seeds);
      },
      [](const RunConfig& c) {
        std::string out;
        for (std::size_t i = 0; i < c.compare_seeds.size(); ++i) {
          if (i > 0) out += ',';
          out += std::to_string(c.compare_seeds[i]);
        }
        return out;
      }});
  keys.push_back(KeyHandler{
      "out.dir",
      [](RunConfig& c, const std::string& value) {
        if (value.empty()) throw std::invalid_argument("out.dir must not be empty");
        c.out_dir = value;
      },
      [](const RunConfig& c) { return c.out_dir; }});

  return keys;
}

const std::vector<KeyHandler>& registry() {
  static const std::vector<KeyHandler> keys = build_registry();
  return keys;
}

// Cross-field checks that single-key validators cannot express.
void validate_config(const RunConfig& c) {
  if (c.b_min >= c.rho)
    throw std::invalid_argument("bandwidth.min must be below bandwidth.rho");
  if (c.sys.acc_track_csrt <= c.sys.acc_track_kcf)
    throw std::invalid_argument("env.acc_track.csrt must exceed env.acc_track.kcf");
  for (int m = 0; m < 3; ++m) {
    for (int r = 0; r < 3; ++r) {
      if (r > 0 && c.sys.acc_detect[m][r] > c.sys.acc_detect[m][r - 1])
        throw std::invalid_argument("env.acc table must be non-increasing across resolutions");
      if (m > 0 && c.sys.acc_detect[m][r] > c.sys.acc_detect[m - 1][r])
        throw std::invalid_argument("env.acc table must be non-increasing across models");
      if (r > 0 && c.sys.u_infer[m][r] > c.sys.u_infer[m][r - 1])
        throw std::invalid_argument("env.u_infer table must be non-increasing across resolutions");
      if (m > 0 && c.sys.u_infer[m][r] > c.sys.u_infer[m - 1][r])
        throw std::invalid_argument("env.u_infer table must be non-increasing across models");
    }
  }
  if (static_cast<std::size_t>(c.ddqn.batch_size) > c.ddqn.buffer_capacity)
    throw std::invalid_argument("ddqn.batch_size must not exceed ddqn.buffer_capacity");
}

void finalize(RunConfig& c, const std::set<std::string>& seen) {
  // The bandit's initial bandwidth average and the network input scales
  // follow the configured workload unless pinned in the file.
  if (seen.find("cmab.init_bandwidth") == seen.end()) c.cmab.init_bandwidth = c.rho;
  c.ddqn.scale.bandwidth = c.rho;
  c.ddqn.scale.objects = static_cast<double>(c.trace.max_objects);
  validate_config(c);
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  finalize(c, {});
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig config;
  std::set<std::string> seen;
  std::istringstream stream(text);
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    line_number += 1;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_number) +
                                  ": expected key=value, got '" + line + "'");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto strip = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    strip(key);
    strip(value);

    bool handled = false;
    for (const KeyHandler& handler : registry()) {
      if (handler.key == key) {
        handler.set(config, value);
        handled = true;
        break;
      }
    }
    if (!handled) throw std::invalid_argument("unknown config key '" + key + "'");
    seen.insert(key);
  }
  finalize(config, seen);
  return config;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

std::string dump_config(const RunConfig& config) {
  std::ostringstream out;
  for (const KeyHandler& handler : registry()) {
    out << handler.key << '=' << handler.get(config) << '\n';
  }
  return out.str();
}

}  // namespace vasim
