#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "vasim/cmab.hpp"
#include "vasim/trace.hpp"

using namespace vasim;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("context classification covers all four quadrants") {
  CmabParams params;
  params.init_density = 5.0;
  params.init_bandwidth = 10.0;
  const CmabState state(params);

  CHECK(state.classify_context(10.0, 12.0) == Context::HighDensityHighBandwidth);
  CHECK(state.classify_context(2.0, 15.0) == Context::LowDensityHighBandwidth);
  CHECK(state.classify_context(10.0, 5.0) == Context::HighDensityLowBandwidth);
  CHECK(state.classify_context(2.0, 5.0) == Context::LowDensityLowBandwidth);
  // Equality falls to the low side.
  CHECK(state.classify_context(5.0, 10.0) == Context::LowDensityLowBandwidth);
}

TEST_CASE("context partition is total") {
  CmabParams params;
  const CmabState state(params);
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const double n = 20.0 * rng.uniform01();
    const double b = 30.0 * rng.uniform01() + 0.01;
    const Context c = state.classify_context(n, b);
    CHECK(static_cast<int>(c) >= 0);
    CHECK(static_cast<int>(c) < kContextCount);
  }
}

TEST_CASE("moving averages follow the stated recurrences") {
  SUBCASE("weight one jumps to the observation") {
    CmabParams params;
    params.xi_density = 1.0;
    CmabState state(params);
    state.update_density_average(10.0);
    CHECK(state.density_average() == 10.0);
  }
  SUBCASE("0.3 * 10 + 0.7 * 5 = 6.5") {
    CmabParams params;
    params.xi_density = 0.3;
    params.init_density = 5.0;
    CmabState state(params);
    state.update_density_average(10.0);
    CHECK(state.density_average() == doctest::Approx(6.5).epsilon(1e-12));
  }
  SUBCASE("weight zero never moves") {
    CmabParams params;
    params.xi_bandwidth = 0.0;
    CmabState state(params);
    for (int i = 0; i < 100; ++i) state.update_bandwidth_average(50.0);
    CHECK(state.bandwidth_average() == params.init_bandwidth);
  }
}

TEST_CASE("moving average stays inside the observed range") {
  CmabParams params;
  params.init_density = 3.0;
  CmabState state(params);
  Rng rng(12);
  const double upper = 15.0;
  for (int i = 0; i < 5000; ++i) {
    state.update_density_average(upper * rng.uniform01());
    CHECK(state.density_average() >= 0.0);
    CHECK(state.density_average() <= std::max(params.init_density, upper));
  }
}

TEST_CASE("config selection") {
  CmabParams params;
  CmabState state(params);
  Rng rng(5);

  SUBCASE("all-zero estimates exploit the first arm") {
    const BlockConfig cfg = state.select_config(Context::LowDensityLowBandwidth, 0.0, rng);
    CHECK(cfg.model == DetectModel::Yolov5x);
    CHECK(cfg.resolution == Resolution::R640);
  }
  SUBCASE("highest estimate wins at epsilon 0") {
    for (int g = 0; g < kConfigCount; ++g) {
      state.update_estimate(Context::HighDensityHighBandwidth, config_from_index(g),
                            0.1 * (g + 1));
    }
    const BlockConfig cfg = state.select_config(Context::HighDensityHighBandwidth, 0.0, rng);
    CHECK(cfg.model == DetectModel::Yolov5m);
    CHECK(cfg.resolution == Resolution::R320);
  }
  SUBCASE("epsilon 1 is uniform over the nine arms") {
    std::vector<int> counts(kConfigCount, 0);
    const int draws = 90000;
    for (int i = 0; i < draws; ++i) {
      counts[config_index(state.select_config(Context::LowDensityLowBandwidth, 1.0, rng))] += 1;
    }
    for (int c : counts) {
      const double freq = static_cast<double>(c) / draws;
      CHECK(freq >= 0.10);
      CHECK(freq <= 0.123);
    }
  }
}

TEST_CASE("select_config consumes one draw to branch plus one to explore") {
  const CmabState state{CmabParams{}};
  {
    Rng a(3), b(3);
    state.select_config(Context::LowDensityLowBandwidth, 0.0, a);
    b.next_u64();
    CHECK(a.next_u64() == b.next_u64());
  }
  {
    Rng a(4), b(4);
    state.select_config(Context::LowDensityLowBandwidth, 1.0, a);
    b.next_u64();
    b.next_u64();
    CHECK(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("estimate updates") {
  CmabParams params;
  params.phi = 0.1;

  SUBCASE("single step from zero") {
    CmabState state(params);
    state.update_estimate(Context::LowDensityHighBandwidth, config_from_index(4), 1.0);
    CHECK(state.gain(Context::LowDensityHighBandwidth, 4) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(state.pulls(Context::LowDensityHighBandwidth, 4) == 1);
  }
  SUBCASE("fixed point when the reward equals the estimate") {
    CmabState state(params);
    state.update_estimate(Context::LowDensityLowBandwidth, config_from_index(0), 0.0);
    CHECK(state.gain(Context::LowDensityLowBandwidth, 0) == 0.0);
  }
  SUBCASE("only the played cell changes") {
    CmabState state(params);
    state.update_estimate(Context::HighDensityLowBandwidth, config_from_index(7), 2.0);
    for (int e = 0; e < kContextCount; ++e) {
      for (int g = 0; g < kConfigCount; ++g) {
        if (e == static_cast<int>(Context::HighDensityLowBandwidth) && g == 7) continue;
        CHECK(state.gain(static_cast<Context>(e), g) == 0.0);
        CHECK(state.pulls(static_cast<Context>(e), g) == 0);
      }
    }
  }
  SUBCASE("geometric convergence under a constant reward") {
    CmabState state(params);
    const double target = 0.8;
    const double q0 = 0.0;
    for (int k = 1; k <= 200; ++k) {
      state.update_estimate(Context::HighDensityHighBandwidth, config_from_index(2), target);
      const double expected = target + std::pow(1.0 - params.phi, k) * (q0 - target);
      CHECK(std::abs(state.gain(Context::HighDensityHighBandwidth, 2) - expected) < 1e-9);
    }
  }
}

TEST_CASE("exploitation is a pure function of context and estimates") {
  CmabParams params;
  CmabState state(params);
  state.update_estimate(Context::HighDensityHighBandwidth, config_from_index(3), 1.0);
  Rng rng1(1), rng2(999);
  const BlockConfig a = state.select_config(Context::HighDensityHighBandwidth, 0.0, rng1);
  const BlockConfig b = state.select_config(Context::HighDensityHighBandwidth, 0.0, rng2);
  CHECK(config_index(a) == config_index(b));
  CHECK(config_index(a) == 3);
}

TEST_CASE("checkpoint round-trip") {
  CmabParams params;
  CmabState state(params);
  Rng rng(6);
  for (int i = 0; i < 500; ++i) {
    state.update_estimate(static_cast<Context>(rng.uniform_int(4)),
                          config_from_index(static_cast<int>(rng.uniform_int(9))),
                          rng.uniform01());
    state.update_density_average(10.0 * rng.uniform01());
    state.update_bandwidth_average(20.0 * rng.uniform01() + 0.1);
  }
  const std::string path = temp_path("vasim_cmab.ckpt");
  state.save(path);
  const CmabState loaded = CmabState::load(path);
  CHECK(loaded == state);
  std::remove(path.c_str());
}

TEST_CASE("pretraining") {
  const Trace trace = generate_trace(SceneGenParams{}, 10.0, 5.0, 0.5, 42, 200);
  const SystemParams sys;
  const CmabParams params;

  SUBCASE("zero slots rejected") {
    CHECK_THROWS_AS(pretrain_cmab(trace, sys, params, 0, 1), std::invalid_argument);
  }
  SUBCASE("deterministic per seed") {
    const CmabState a = pretrain_cmab(trace, sys, params, 500, 9);
    const CmabState b = pretrain_cmab(trace, sys, params, 500, 9);
    CHECK(a == b);
  }
  SUBCASE("one pull per block of every visited slot") {
    const int slots = 150;
    const CmabState state = pretrain_cmab(trace, sys, params, slots, 9);
    std::uint64_t expected = 0;
    for (int i = 0; i < slots; ++i) {
      expected += trace.slots[static_cast<std::size_t>(i) % trace.slots.size()].blocks.size();
    }
    std::uint64_t total = 0;
    for (int e = 0; e < kContextCount; ++e)
      for (int g = 0; g < kConfigCount; ++g) total += state.pulls(static_cast<Context>(e), g);
    CHECK(total == expected);
  }
}

TEST_CASE("stationary bandit: exploitation locks onto the best arm per context") {
  // Synthetic bandit with frozen context statistics (EMA weights zero) and a
  // reward model where (Yolov5m, 320p) strictly dominates in every context.
  CmabParams params;
  params.xi_density = 0.0;
  params.xi_bandwidth = 0.0;
  params.init_density = 5.0;
  params.init_bandwidth = 10.0;
  params.phi = 0.1;
  CmabState state(params);
  Rng rng(2718);

  const int best_arm = config_index(BlockConfig{DetectModel::Yolov5m, Resolution::R320});
  auto reward_for = [&](int arm) {
    const double mean = arm == best_arm ? 1.0 : 0.2 + 0.02 * arm;
    return mean + 0.05 * rng.normal();
  };
  // Inputs that hit each context against the frozen averages.
  const double densities[] = {9.0, 1.0, 9.0, 1.0};
  const double bandwidths[] = {20.0, 20.0, 2.0, 2.0};

  for (int pull = 0; pull < 2000; ++pull) {
    const int which = pull % kContextCount;
    const Context context = state.classify_context(densities[which], bandwidths[which]);
    CHECK(static_cast<int>(context) == which);
    const BlockConfig config = state.select_config(context, params.epsilon, rng);
    state.update_estimate(context, config, reward_for(config_index(config)));
  }

  for (int which = 0; which < kContextCount; ++which) {
    const Context context = state.classify_context(densities[which], bandwidths[which]);
    int hits = 0;
    for (int pull = 0; pull < 1000; ++pull) {
      if (config_index(state.select_config(context, 0.0, rng)) == best_arm) hits += 1;
    }
    CHECK(hits >= 900);
  }
}
