#include "vasim/ddqn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vasim {

namespace {

// Forward pass keeping pre-activation inputs of every layer for backprop.
struct ForwardTrace {
  std::vector<std::vector<double>> activations;  // activations[0] = input
};

std::vector<double> forward_traced(const MlpNetwork& net,
                                   const std::vector<double>& input,
                                   ForwardTrace* trace) {
  if (static_cast<int>(input.size()) != net.input_size())
    throw std::invalid_argument("forward: input size mismatch");
  std::vector<double> current = input;
  if (trace != nullptr) trace->activations.push_back(current);
  const std::size_t layer_count = net.weights.size();
  for (std::size_t layer = 0; layer < layer_count; ++layer) {
    const int in_dim = net.layer_sizes[layer];
    const int out_dim = net.layer_sizes[layer + 1];
    const std::vector<double>& w = net.weights[layer];
    const std::vector<double>& b = net.biases[layer];
    std::vector<double> next(static_cast<std::size_t>(out_dim));
    for (int o = 0; o < out_dim; ++o) {
      double acc = b[o];
      const double* row = &w[static_cast<std::size_t>(o) * in_dim];
      for (int i = 0; i < in_dim; ++i) acc += row[i] * current[i];
      if (layer + 1 < layer_count && acc < 0.0) acc = 0.0;  // ReLU on hidden
      next[o] = acc;
    }
    current = std::move(next);
    if (trace != nullptr) trace->activations.push_back(current);
  }
  return current;
}

}  // namespace

MlpNetwork MlpNetwork::random_init(const std::vector<int>& sizes, Rng& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("MlpNetwork: need at least two layers");
  for (int s : sizes) {
    if (s < 1) throw std::invalid_argument("MlpNetwork: layer sizes must be >= 1");
  }
  MlpNetwork net;
  net.layer_sizes = sizes;
  for (std::size_t layer = 0; layer + 1 < sizes.size(); ++layer) {
    const int in_dim = sizes[layer];
    const int out_dim = sizes[layer + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    std::vector<double> w(static_cast<std::size_t>(in_dim) * out_dim);
    for (double& v : w) v = (2.0 * rng.uniform01() - 1.0) * bound;
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(static_cast<std::size_t>(out_dim), 0.0);
  }
  return net;
}

std::vector<double> MlpNetwork::forward(const std::vector<double>& input) const {
  return forward_traced(*this, input, nullptr);
}

bool MlpNetwork::finite() const {
  for (const auto& w : weights)
    for (double v : w)
      if (!std::isfinite(v)) return false;
  for (const auto& b : biases)
    for (double v : b)
      if (!std::isfinite(v)) return false;
  return true;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
  entries_.reserve(capacity_);
}

void ReplayBuffer::push(Transition t) {
  if (entries_.size() < capacity_) {
    entries_.push_back(std::move(t));
  } else {
    entries_[write_pos_] = std::move(t);  // overwrite oldest
  }
  write_pos_ = (write_pos_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (batch > entries_.size())
    throw std::invalid_argument("ReplayBuffer: batch larger than buffer");
  // Partial Fisher-Yates over an index vector gives a uniform sample
  // without replacement.
  std::vector<std::uint32_t> indices(entries_.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<std::uint32_t>(i);
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (std::size_t k = 0; k < batch; ++k) {
    const std::size_t j = k + rng.uniform_int(static_cast<std::uint32_t>(indices.size() - k));
    std::swap(indices[k], indices[j]);
    out.push_back(&entries_[indices[k]]);
  }
  return out;
}

int argmax_action(const std::vector<double>& values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;  // ties keep the lowest index
  }
  return best;
}

int select_action(const MlpNetwork& net, const std::vector<double>& state,
                  double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("select_action: epsilon must be in [0,1]");
  if (rng.uniform01() < epsilon) {
    return static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(net.output_size())));
  }
  return argmax_action(net.forward(state));
}

std::vector<double> td_targets(const std::vector<const Transition*>& batch,
                               const MlpNetwork& net, const MlpNetwork& target_net,
                               double gamma) {
  if (batch.empty()) throw std::invalid_argument("td_targets: empty batch");
  std::vector<double> targets;
  targets.reserve(batch.size());
  for (const Transition* t : batch) {
    if (t->terminal) {
      targets.push_back(t->reward);
      continue;
    }
    // Action chosen by the current net, value read from the target net.
    const int chosen = argmax_action(net.forward(t->next_state));
    const double value = target_net.forward(t->next_state)[chosen];
    targets.push_back(t->reward + gamma * value);
  }
  return targets;
}

double train_on_batch(MlpNetwork& net, const MlpNetwork& target_net,
                      const std::vector<const Transition*>& batch,
                      const DdqnHyper& hyper) {
  const std::vector<double> targets = td_targets(batch, net, target_net, hyper.gamma);
  const double batch_scale = 1.0 / static_cast<double>(batch.size());

  // Gradient accumulators matching the parameter layout.
  std::vector<std::vector<double>> grad_w;
  std::vector<std::vector<double>> grad_b;
  for (std::size_t layer = 0; layer < net.weights.size(); ++layer) {
    grad_w.emplace_back(net.weights[layer].size(), 0.0);
    grad_b.emplace_back(net.biases[layer].size(), 0.0);
  }

  double loss = 0.0;
  const std::size_t layer_count = net.weights.size();
  for (std::size_t sample = 0; sample < batch.size(); ++sample) {
    const Transition& t = *batch[sample];
    ForwardTrace trace;
    const std::vector<double> q = forward_traced(net, t.state, &trace);
    const double error = q[t.action] - targets[sample];
    loss += error * error;

    // d(mean squared error)/d(output) is nonzero only at the taken action.
    std::vector<double> delta(q.size(), 0.0);
    delta[t.action] = 2.0 * error * batch_scale;

    for (std::size_t layer = layer_count; layer-- > 0;) {
      const int in_dim = net.layer_sizes[layer];
      const int out_dim = net.layer_sizes[layer + 1];
      const std::vector<double>& input = trace.activations[layer];
      std::vector<double> prev_delta(static_cast<std::size_t>(in_dim), 0.0);
      for (int o = 0; o < out_dim; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        grad_b[layer][o] += d;
        double* gw_row = &grad_w[layer][static_cast<std::size_t>(o) * in_dim];
        const double* w_row = &net.weights[layer][static_cast<std::size_t>(o) * in_dim];
        for (int i = 0; i < in_dim; ++i) {
          gw_row[i] += d * input[i];
          prev_delta[i] += d * w_row[i];
        }
      }
      if (layer > 0) {
        // ReLU gate: hidden activation zero means the unit was clamped.
        const std::vector<double>& act = trace.activations[layer];
        for (int i = 0; i < in_dim; ++i) {
          if (act[i] <= 0.0) prev_delta[i] = 0.0;
        }
      }
      delta = std::move(prev_delta);
    }
  }

  for (std::size_t layer = 0; layer < layer_count; ++layer) {
    for (std::size_t i = 0; i < net.weights[layer].size(); ++i)
      net.weights[layer][i] -= hyper.learning_rate * grad_w[layer][i];
    for (std::size_t i = 0; i < net.biases[layer].size(); ++i)
      net.biases[layer][i] -= hyper.learning_rate * grad_b[layer][i];
  }
  if (!net.finite()) throw std::runtime_error("train_on_batch: parameters diverged");

  return loss * batch_scale;
}

std::optional<double> train_step(MlpNetwork& net, const MlpNetwork& target_net,
                                 const ReplayBuffer& buffer, const DdqnHyper& hyper,
                                 Rng& rng) {
  if (buffer.size() < static_cast<std::size_t>(hyper.batch_size)) return std::nullopt;
  const auto batch = buffer.sample(static_cast<std::size_t>(hyper.batch_size), rng);
  return train_on_batch(net, target_net, batch, hyper);
}

void validate_hyper(const DdqnHyper& hyper) {
  if (hyper.gamma < 0.0 || hyper.gamma >= 1.0)
    throw std::invalid_argument("ddqn: gamma must be in [0,1)");
  if (hyper.learning_rate <= 0.0)
    throw std::invalid_argument("ddqn: learning rate must be > 0");
  if (hyper.batch_size < 1) throw std::invalid_argument("ddqn: batch size must be >= 1");
  if (hyper.sync_period < 1) throw std::invalid_argument("ddqn: sync period must be >= 1");
  if (hyper.epsilon < 0.0 || hyper.epsilon > 1.0)
    throw std::invalid_argument("ddqn: epsilon must be in [0,1]");
  if (hyper.buffer_capacity < static_cast<std::size_t>(hyper.batch_size))
    throw std::invalid_argument("ddqn: buffer capacity must cover one batch");
}

TrainingResult run_ddqn_training(DiscreteEnv& env, const DdqnHyper& hyper,
                                 int episodes, std::uint64_t seed) {
  if (episodes < 0) throw std::invalid_argument("run_ddqn_training: episodes must be >= 0");
  validate_hyper(hyper);
  Rng rng(seed);

  std::vector<int> sizes;
  sizes.push_back(env.state_dim());
  for (int h : hyper.hidden_sizes) sizes.push_back(h);
  sizes.push_back(env.action_count());

  TrainingResult result;
  result.net = MlpNetwork::random_init(sizes, rng);
  result.target_net = result.net;

  ReplayBuffer buffer(hyper.buffer_capacity);
  long global_step = 0;
  for (int episode = 0; episode < episodes; ++episode) {
    std::vector<double> state = env.reset();
    double episode_reward = 0.0;
    bool done = false;
    while (!done) {
      const int action = select_action(result.net, state, hyper.epsilon, rng);
      DiscreteEnv::Feedback fb = env.step(action);
      episode_reward += fb.reward;
      buffer.push(Transition{state, action, fb.reward, fb.observation, fb.done});
      train_step(result.net, result.target_net, buffer, hyper, rng);
      global_step += 1;
      if (global_step % hyper.sync_period == 0) {
        sync_target(result.net, result.target_net);
      }
      state = std::move(fb.observation);
      done = fb.done;
    }
    result.episode_rewards.push_back(episode_reward);
  }
  return result;
}

void save_network(const MlpNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_network: cannot open " + path);
  out << "vasim-qnet 1\n";
  out << net.layer_sizes.size();
  for (int s : net.layer_sizes) out << ' ' << s;
  out << "\n";
  char buf[40];
  for (std::size_t layer = 0; layer < net.weights.size(); ++layer) {
    for (std::size_t i = 0; i < net.weights[layer].size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", net.weights[layer][i]);
      out << buf << (i + 1 == net.weights[layer].size() ? "" : " ");
    }
    out << "\n";
    for (std::size_t i = 0; i < net.biases[layer].size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", net.biases[layer][i]);
      out << buf << (i + 1 == net.biases[layer].size() ? "" : " ");
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("save_network: failed writing " + path);
}

MlpNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_network: cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "vasim-qnet" || version != 1)
    throw std::runtime_error("load_network: unrecognized checkpoint format in " + path);

  std::size_t layer_count = 0;
  in >> layer_count;
  if (!in || layer_count < 2) throw std::runtime_error("load_network: bad layer count in " + path);
  MlpNetwork net;
  net.layer_sizes.resize(layer_count);
  for (std::size_t i = 0; i < layer_count; ++i) {
    in >> net.layer_sizes[i];
    if (!in || net.layer_sizes[i] < 1)
      throw std::runtime_error("load_network: bad layer size in " + path);
  }
  for (std::size_t layer = 0; layer + 1 < layer_count; ++layer) {
    const std::size_t in_dim = static_cast<std::size_t>(net.layer_sizes[layer]);
    const std::size_t out_dim = static_cast<std::size_t>(net.layer_sizes[layer + 1]);
    std::vector<double> w(in_dim * out_dim);
    for (double& v : w) in >> v;
    std::vector<double> b(out_dim);
    for (double& v : b) in >> v;
    if (!in) throw std::runtime_error("load_network: truncated parameters in " + path);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

}  // namespace vasim
