#ifndef VASIM_DDQN_HPP_
#define VASIM_DDQN_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vasim/rng.hpp"

namespace vasim {

// Fully-connected net with rectified-linear hidden layers and a linear
// output layer. Weights are row-major (out x in) per layer. Everything is
// plain value data so copies are deep and cheap at these sizes.
struct MlpNetwork {
  std::vector<int> layer_sizes;                 // e.g. {4, 64, 64, 5}
  std::vector<std::vector<double>> weights;     // [layer][out*in]
  std::vector<std::vector<double>> biases;      // [layer][out]

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }

  // Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static MlpNetwork random_init(const std::vector<int>& sizes, Rng& rng);

  std::vector<double> forward(const std::vector<double>& input) const;

  bool finite() const;
};

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
};

// Fixed-capacity FIFO ring of transitions with uniform batch sampling
// (without replacement inside a batch).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return entries_[i]; }

  std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t write_pos_ = 0;
  std::vector<Transition> entries_;
};

// Scales raw observations into O(1) network inputs.
struct StateScale {
  double bandwidth = 10.0;  // divide b by the trace mean
  double objects = 12.0;    // divide c by the walk ceiling
  double stall = 20.0;      // divide p by this, clipped to 1
};

struct DdqnHyper {
  double gamma = 0.9;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int sync_period = 100;   // target refresh every C training slots
  double epsilon = 0.3;    // exploration rate during training
  std::size_t buffer_capacity = 10000;
  std::vector<int> hidden_sizes = {64, 64};
  StateScale scale;
};

// Throws when any hyperparameter is outside its domain.
void validate_hyper(const DdqnHyper& hyper);

// Epsilon-greedy over the net's action values. One rng draw decides the
// branch; an exploring branch consumes one more for the uniform choice.
// Greedy ties break to the lowest action index.
int select_action(const MlpNetwork& net, const std::vector<double>& state,
                  double epsilon, Rng& rng);

int argmax_action(const std::vector<double>& values);

// Double-DQN targets: y = r for terminal transitions, else
// y = r + gamma * Q_target(s', argmax_a Q_net(s', a)).
std::vector<double> td_targets(const std::vector<const Transition*>& batch,
                               const MlpNetwork& net, const MlpNetwork& target_net,
                               double gamma);

// One SGD step on the mean squared TD error of a sampled batch, gradient
// flowing only through the taken actions. Returns the pre-update batch
// loss, or nullopt when the buffer cannot fill a batch yet.
std::optional<double> train_step(MlpNetwork& net, const MlpNetwork& target_net,
                                 const ReplayBuffer& buffer, const DdqnHyper& hyper,
                                 Rng& rng);

// Same update applied to an explicit batch; used by train_step and directly
// by tests that pin the batch.
double train_on_batch(MlpNetwork& net, const MlpNetwork& target_net,
                      const std::vector<const Transition*>& batch,
                      const DdqnHyper& hyper);

inline void sync_target(const MlpNetwork& net, MlpNetwork& target_net) {
  target_net = net;
}

// Minimal episodic environment interface for the offloading training loop;
// also what the toy MDPs in the tests implement.
class DiscreteEnv {
 public:
  virtual ~DiscreteEnv() = default;
  virtual int state_dim() const = 0;
  virtual int action_count() const = 0;
  virtual std::vector<double> reset() = 0;

  struct Feedback {
    std::vector<double> observation;
    double reward = 0.0;
    bool done = false;
  };
  virtual Feedback step(int action) = 0;
};

struct TrainingResult {
  MlpNetwork net;
  MlpNetwork target_net;
  std::vector<double> episode_rewards;
};

// The DDQN training loop: for each episode, observe / epsilon-greedy select /
// execute / store / sample / target / update, syncing the target net every
// sync_period training slots. Deterministic per seed.
TrainingResult run_ddqn_training(DiscreteEnv& env, const DdqnHyper& hyper,
                                 int episodes, std::uint64_t seed);

// Versioned text checkpoint: layer sizes, then per-layer weights (row-major)
// and biases at full precision. Load validates the shape line by line.
void save_network(const MlpNetwork& net, const std::string& path);
MlpNetwork load_network(const std::string& path);

}  // namespace vasim

#endif  // VASIM_DDQN_HPP_
