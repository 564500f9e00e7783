#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "vasim/ddqn.hpp"

using namespace vasim;

namespace {

MlpNetwork zero_net(const std::vector<int>& sizes) {
  MlpNetwork net;
  net.layer_sizes = sizes;
  for (std::size_t layer = 0; layer + 1 < sizes.size(); ++layer) {
    net.weights.emplace_back(static_cast<std::size_t>(sizes[layer]) * sizes[layer + 1], 0.0);
    net.biases.emplace_back(static_cast<std::size_t>(sizes[layer + 1]), 0.0);
  }
  return net;
}

// Net with no weights, only output biases: forward(x) == bias vector.
MlpNetwork bias_net(const std::vector<double>& outputs) {
  MlpNetwork net = zero_net({1, static_cast<int>(outputs.size())});
  net.biases[0] = outputs;
  return net;
}

// Semi-gradient loss: targets are held fixed while the net parameters move,
// matching what the backward pass differentiates.
double loss_with_fixed_targets(const MlpNetwork& net,
                               const std::vector<const Transition*>& batch,
                               const std::vector<double>& targets) {
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double q = net.forward(batch[i]->state)[batch[i]->action];
    const double err = q - targets[i];
    loss += err * err;
  }
  return loss / static_cast<double>(batch.size());
}

// Deterministic 2-state chain: action 0 stays (reward 0), action 1 advances
// to the other state (reward 1). Optimal policy plays 1 everywhere.
class ChainMdp : public DiscreteEnv {
 public:
  explicit ChainMdp(int episode_length) : episode_length_(episode_length) {}
  int state_dim() const override { return 2; }
  int action_count() const override { return 2; }
  std::vector<double> reset() override {
    state_ = 0;
    steps_ = 0;
    return encode();
  }
  Feedback step(int action) override {
    steps_ += 1;
    Feedback fb;
    if (action == 1) {
      state_ = 1 - state_;
      fb.reward = 1.0;
    }
    fb.observation = encode();
    fb.done = steps_ >= episode_length_;
    return fb;
  }

 private:
  std::vector<double> encode() const {
    return state_ == 0 ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0};
  }
  int state_ = 0;
  int steps_ = 0;
  int episode_length_;
};

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("forward: all-zero parameters give all-zero values") {
  const MlpNetwork net = zero_net({4, 8, 5});
  const std::vector<double> out = net.forward({0.3, -0.1, 0.9, 2.0});
  REQUIRE(out.size() == 5);
  for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("forward: one-hidden-unit net matches the hand computation") {
  MlpNetwork net = zero_net({1, 1, 1});
  net.weights[0] = {0.5};
  net.biases[0] = {0.1};
  net.weights[1] = {-2.0};
  net.biases[1] = {0.3};

  // x=2: hidden = relu(0.5*2 + 0.1) = 1.1, out = 0.3 - 2*1.1 = -1.9
  CHECK(net.forward({2.0})[0] == doctest::Approx(-1.9).epsilon(1e-12));
  // x=-1: hidden = relu(-0.4) = 0, out = 0.3
  CHECK(net.forward({-1.0})[0] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("forward is pure") {
  Rng rng(5);
  const MlpNetwork net = MlpNetwork::random_init({4, 16, 5}, rng);
  const std::vector<double> state = {0.1, 0.5, -0.3, 0.8};
  CHECK(net.forward(state) == net.forward(state));
}

TEST_CASE("select_action: greedy at epsilon 0, lowest index on ties") {
  Rng rng(1);
  SUBCASE("plain argmax") {
    const MlpNetwork net = bias_net({0.1, 0.2, 0.9, 0.3, 0.0});
    for (int i = 0; i < 20; ++i) CHECK(select_action(net, {1.0}, 0.0, rng) == 2);
  }
  SUBCASE("tie between actions 1 and 3 resolves to 1") {
    const MlpNetwork net = bias_net({0.0, 5.0, 0.0, 5.0, 0.0});
    CHECK(select_action(net, {1.0}, 0.0, rng) == 1);
  }
}

TEST_CASE("select_action consumes one draw to branch plus one to explore") {
  const MlpNetwork net = bias_net({0.1, 0.2, 0.3, 0.4, 0.5});
  {
    Rng a(5), b(5);
    select_action(net, {1.0}, 0.0, a);  // greedy branch: single draw
    b.next_u64();
    CHECK(a.next_u64() == b.next_u64());
  }
  {
    Rng a(6), b(6);
    select_action(net, {1.0}, 1.0, a);  // exploring branch: two draws
    b.next_u64();
    b.next_u64();
    CHECK(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("parameters stay finite under sustained random training") {
  Rng rng(404);
  MlpNetwork net = MlpNetwork::random_init({4, 16, 5}, rng);
  MlpNetwork target = net;
  ReplayBuffer buffer(256);
  DdqnHyper hyper;
  hyper.batch_size = 16;
  for (int i = 0; i < 600; ++i) {
    Transition t;
    for (int k = 0; k < 4; ++k) t.state.push_back(4.0 * rng.uniform01() - 2.0);
    for (int k = 0; k < 4; ++k) t.next_state.push_back(4.0 * rng.uniform01() - 2.0);
    t.action = static_cast<int>(rng.uniform_int(5));
    t.reward = 2.0 * rng.uniform01();
    t.terminal = rng.uniform01() < 0.1;
    buffer.push(t);
    train_step(net, target, buffer, hyper, rng);
    if (i % 50 == 0) sync_target(net, target);
    REQUIRE(net.finite());
  }
}

TEST_CASE("select_action: epsilon 1 explores uniformly") {
  Rng rng(9);
  const MlpNetwork net = bias_net({0.0, 0.0, 0.0, 0.0, 9.0});
  std::vector<int> counts(5, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[select_action(net, {1.0}, 1.0, rng)] += 1;
  for (int c : counts) {
    // Binomial(1e5, 0.2) stays within [0.19, 0.21] with ~8 sigma to spare.
    CHECK(c >= static_cast<int>(0.19 * draws));
    CHECK(c <= static_cast<int>(0.21 * draws));
  }
}

TEST_CASE("td_targets") {
  const double gamma = 0.9;
  SUBCASE("terminal transitions pass the reward through") {
    const MlpNetwork net = bias_net({0.5, 0.9});
    Transition t;
    t.state = {1.0};
    t.next_state = {1.0};
    t.reward = 0.7;
    t.terminal = true;
    const auto targets = td_targets({&t}, net, net, gamma);
    CHECK(targets[0] == 0.7);
  }
  SUBCASE("gamma 0 reduces to the reward") {
    const MlpNetwork net = bias_net({0.5, 0.9});
    Transition t;
    t.state = {1.0};
    t.next_state = {1.0};
    t.reward = 0.4;
    const auto targets = td_targets({&t}, net, net, 0.0);
    CHECK(targets[0] == doctest::Approx(0.4).epsilon(1e-12));
  }
  SUBCASE("selection by the current net, evaluation by the target net") {
    // Current net ranks action 1 best; the target net values it at 0.2.
    const MlpNetwork net = bias_net({0.5, 0.9});
    const MlpNetwork target = bias_net({0.4, 0.2});
    Transition t;
    t.state = {1.0};
    t.next_state = {1.0};
    t.reward = 1.0;
    const auto targets = td_targets({&t}, net, target, gamma);
    CHECK(targets[0] == doctest::Approx(1.18).epsilon(1e-12));
    // A single-net ("vanilla") target would bootstrap from max target value.
    const double vanilla = 1.0 + gamma * 0.4;
    CHECK(targets[0] != doctest::Approx(vanilla));
  }
}

TEST_CASE("train_on_batch: exact fit means zero loss and no movement") {
  MlpNetwork net = zero_net({2, 3, 2});
  const MlpNetwork target = net;
  Transition t;
  t.state = {0.4, 0.6};
  t.next_state = {0.4, 0.6};
  t.action = 1;
  t.reward = 0.0;
  t.terminal = true;

  DdqnHyper hyper;
  const MlpNetwork before = net;
  const double loss = train_on_batch(net, target, {&t}, hyper);
  CHECK(loss == 0.0);
  CHECK(net.weights == before.weights);
  CHECK(net.biases == before.biases);
}

TEST_CASE("train_on_batch: one step descends on a single transition") {
  MlpNetwork net = zero_net({1, 1});
  net.weights[0] = {0.5};
  const MlpNetwork target = net;
  Transition t;
  t.state = {1.0};
  t.next_state = {1.0};
  t.action = 0;
  t.reward = 1.0;
  t.terminal = true;

  DdqnHyper hyper;
  hyper.learning_rate = 0.1;
  const double first = train_on_batch(net, target, {&t}, hyper);
  const double second = train_on_batch(net, target, {&t}, hyper);
  CHECK(first == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(second < first);
}

TEST_CASE("backprop matches central finite differences") {
  // Oracle: numeric differentiation of the forward-only loss with the
  // targets frozen, compared against the gradient recovered from the
  // parameter update (theta_before - theta_after) / lr.
  Rng rng(31337);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    MlpNetwork net = MlpNetwork::random_init({4, 8, 5}, rng);
    const MlpNetwork target = MlpNetwork::random_init({4, 8, 5}, rng);

    std::vector<Transition> storage;
    for (int i = 0; i < 8; ++i) {
      Transition t;
      for (int k = 0; k < 4; ++k) t.state.push_back(2.0 * rng.uniform01() - 1.0);
      for (int k = 0; k < 4; ++k) t.next_state.push_back(2.0 * rng.uniform01() - 1.0);
      t.action = static_cast<int>(rng.uniform_int(5));
      t.reward = rng.uniform01();
      t.terminal = rng.uniform01() < 0.25;
      storage.push_back(t);
    }
    std::vector<const Transition*> batch;
    for (const Transition& t : storage) batch.push_back(&t);

    DdqnHyper hyper;
    hyper.learning_rate = 1.0;  // update == gradient
    const std::vector<double> targets = td_targets(batch, net, target, hyper.gamma);

    MlpNetwork updated = net;
    train_on_batch(updated, target, batch, hyper);

    const double h = 1e-5;
    for (std::size_t layer = 0; layer < net.weights.size(); ++layer) {
      for (std::size_t i = 0; i < net.weights[layer].size(); ++i) {
        const double analytic = net.weights[layer][i] - updated.weights[layer][i];
        MlpNetwork plus = net, minus = net;
        plus.weights[layer][i] += h;
        minus.weights[layer][i] -= h;
        const double numeric = (loss_with_fixed_targets(plus, batch, targets) -
                                loss_with_fixed_targets(minus, batch, targets)) /
                               (2.0 * h);
        const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic - numeric) / scale);
      }
      for (std::size_t i = 0; i < net.biases[layer].size(); ++i) {
        const double analytic = net.biases[layer][i] - updated.biases[layer][i];
        MlpNetwork plus = net, minus = net;
        plus.biases[layer][i] += h;
        minus.biases[layer][i] -= h;
        const double numeric = (loss_with_fixed_targets(plus, batch, targets) -
                                loss_with_fixed_targets(minus, batch, targets)) /
                               (2.0 * h);
        const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic - numeric) / scale);
      }
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("replay buffer: FIFO eviction") {
  ReplayBuffer buffer(3);
  for (int i = 0; i < 5; ++i) {
    Transition t;
    t.reward = static_cast<double>(i);
    buffer.push(t);
  }
  REQUIRE(buffer.size() == 3);
  std::vector<double> rewards;
  for (std::size_t i = 0; i < buffer.size(); ++i) rewards.push_back(buffer.at(i).reward);
  std::sort(rewards.begin(), rewards.end());
  CHECK(rewards == std::vector<double>{2.0, 3.0, 4.0});
}

TEST_CASE("replay buffer: sampling is uniform without replacement") {
  ReplayBuffer buffer(10);
  for (int i = 0; i < 10; ++i) {
    Transition t;
    t.action = i;
    buffer.push(t);
  }
  Rng rng(17);
  std::vector<int> inclusion(10, 0);
  const int rounds = 4000;
  for (int round = 0; round < rounds; ++round) {
    const auto batch = buffer.sample(5, rng);
    std::vector<bool> seen(10, false);
    for (const Transition* t : batch) {
      CHECK_FALSE(seen[t->action]);  // no duplicates inside a batch
      seen[t->action] = true;
      inclusion[t->action] += 1;
    }
  }
  // Each element is included with probability 1/2: 3 sigma ~ 95.
  for (int c : inclusion) {
    CHECK(c > rounds / 2 - 95);
    CHECK(c < rounds / 2 + 95);
  }
  CHECK_THROWS_AS(buffer.sample(11, rng), std::invalid_argument);
}

TEST_CASE("sync_target copies by value") {
  Rng rng(3);
  MlpNetwork net = MlpNetwork::random_init({4, 8, 5}, rng);
  MlpNetwork target = MlpNetwork::random_init({4, 8, 5}, rng);
  sync_target(net, target);

  const std::vector<double> probe = {0.2, -0.4, 0.6, 0.1};
  CHECK(net.forward(probe) == target.forward(probe));

  sync_target(net, target);
  CHECK(net.forward(probe) == target.forward(probe));  // idempotent

  net.weights[0][0] += 1.0;
  CHECK(net.forward(probe) != target.forward(probe));  // no aliasing
}

TEST_CASE("target outputs are frozen between syncs") {
  Rng rng(11);
  MlpNetwork net = MlpNetwork::random_init({2, 8, 2}, rng);
  MlpNetwork target = net;

  Transition t;
  t.state = {1.0, 0.0};
  t.next_state = {0.0, 1.0};
  t.action = 0;
  t.reward = 1.0;

  DdqnHyper hyper;
  const std::vector<double> probe = {0.5, 0.5};
  const std::vector<double> before = target.forward(probe);
  for (int i = 0; i < 50; ++i) train_on_batch(net, target, {&t}, hyper);
  CHECK(target.forward(probe) == before);
  CHECK(net.finite());
}

TEST_CASE("training loop: zero episodes returns the fresh net and no log") {
  ChainMdp env(25);
  DdqnHyper hyper;
  hyper.hidden_sizes = {16};
  const TrainingResult result = run_ddqn_training(env, hyper, 0, 4);
  CHECK(result.episode_rewards.empty());
  CHECK(result.net.layer_sizes == std::vector<int>{2, 16, 2});
}

TEST_CASE("training loop: identical seeds give identical reward logs") {
  ChainMdp env1(25), env2(25);
  DdqnHyper hyper;
  hyper.hidden_sizes = {16};
  const TrainingResult a = run_ddqn_training(env1, hyper, 20, 99);
  const TrainingResult b = run_ddqn_training(env2, hyper, 20, 99);
  CHECK(a.episode_rewards == b.episode_rewards);
  CHECK(a.net.weights == b.net.weights);
}

TEST_CASE("training loop: chain MDP reaches the optimal policy, 10/10 seeds") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ChainMdp env(50);
    DdqnHyper hyper;
    hyper.hidden_sizes = {16};
    hyper.learning_rate = 3e-3;
    // 100 episodes x 50 slots = 5000 training steps.
    const TrainingResult result = run_ddqn_training(env, hyper, 100, seed);
    REQUIRE(result.net.finite());
    const int action_state0 = argmax_action(result.net.forward({1.0, 0.0}));
    const int action_state1 = argmax_action(result.net.forward({0.0, 1.0}));
    CHECK(action_state0 == 1);
    CHECK(action_state1 == 1);
  }
}

TEST_CASE("checkpoint round-trip validates shapes") {
  Rng rng(8);
  const MlpNetwork net = MlpNetwork::random_init({4, 64, 64, 5}, rng);
  const std::string path = temp_path("vasim_qnet.ckpt");
  save_network(net, path);
  const MlpNetwork loaded = load_network(path);
  CHECK(loaded.layer_sizes == net.layer_sizes);
  CHECK(loaded.weights == net.weights);
  CHECK(loaded.biases == net.biases);
  std::remove(path.c_str());
  CHECK_THROWS(load_network(path));
}
