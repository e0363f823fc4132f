#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepucb/random.hpp"
#include "deepucb/serialize.hpp"

namespace deepucb::nn {

enum class Activation { Sigmoid, Relu };
enum class LossKind { MSE, L1 };
enum class BatchMode { FullBatch, Minibatch };

inline std::string to_string(Activation a) { return a == Activation::Sigmoid ? "sigmoid" : "relu"; }
inline std::string to_string(LossKind l) { return l == LossKind::MSE ? "mse" : "l1"; }

inline Activation parse_activation(const std::string& s) {
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation '" + s + "' (expected sigmoid|relu)");
}

inline LossKind parse_loss(const std::string& s) {
  if (s == "mse") return LossKind::MSE;
  if (s == "l1") return LossKind::L1;
  throw std::invalid_argument("unknown loss '" + s + "' (expected mse|l1)");
}

/// Gradient-descent schedule applied by each training call. The epoch
/// counter restarts at zero on every call, so every call sees the full
/// decay curve `initial_lr * lr_decay_factor^floor(e / decay_every_epochs)`.
struct TrainSchedule {
  int epochs = 20;
  double initial_lr = 0.1;
  double lr_decay_factor = 0.8;
  int decay_every_epochs = 4;
  BatchMode batch_mode = BatchMode::FullBatch;
  std::size_t batch_size = 32;

  double lr_at(int epoch) const {
    return initial_lr * std::pow(lr_decay_factor, epoch / decay_every_epochs);
  }

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainSchedule: epochs must be >= 1");
    if (!(initial_lr > 0.0) || !std::isfinite(initial_lr))
      throw std::invalid_argument("TrainSchedule: initial_lr must be positive");
    if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0))
      throw std::invalid_argument("TrainSchedule: lr_decay_factor must be in (0, 1]");
    if (decay_every_epochs < 1)
      throw std::invalid_argument("TrainSchedule: decay_every_epochs must be >= 1");
    if (batch_mode == BatchMode::Minibatch && batch_size < 1)
      throw std::invalid_argument("TrainSchedule: batch_size must be >= 1");
  }

  bool operator==(const TrainSchedule&) const = default;
};

/// Column-per-sample training data.
struct Dataset {
  Eigen::MatrixXd inputs;   // input_dim x n
  Eigen::MatrixXd targets;  // output_dim x n

  std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
  bool empty() const { return inputs.cols() == 0; }

  static Dataset from_rows(const std::vector<std::vector<double>>& xs,
                           const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("Dataset: inputs/targets size mismatch");
    Dataset d;
    if (xs.empty()) return d;
    d.inputs.resize(static_cast<Eigen::Index>(xs.front().size()), static_cast<Eigen::Index>(xs.size()));
    d.targets.resize(1, static_cast<Eigen::Index>(ys.size()));
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (xs[j].size() != xs.front().size()) throw std::invalid_argument("Dataset: ragged inputs");
      for (std::size_t i = 0; i < xs[j].size(); ++i)
        d.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = xs[j][i];
      d.targets(0, static_cast<Eigen::Index>(j)) = ys[j];
    }
    return d;
  }
};

struct MlpGradient {
  Eigen::MatrixXd weights_hidden;
  Eigen::VectorXd bias_hidden;
  Eigen::MatrixXd weights_out;
  Eigen::VectorXd bias_out;
  double loss = 0.0;

  Eigen::VectorXd flatten() const {
    Eigen::VectorXd v(weights_hidden.size() + bias_hidden.size() + weights_out.size() + bias_out.size());
    Eigen::Index o = 0;
    for (const auto* m : {&weights_hidden, &weights_out}) {
      v.segment(o, m->size()) = m->reshaped();
      o += m->size();
    }
    for (const auto* b : {&bias_hidden, &bias_out}) {
      v.segment(o, b->size()) = *b;
      o += b->size();
    }
    return v;
  }
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int epoch) : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

/// Single-hidden-layer perceptron:
///   out = bias_out + weights_out * act(weights_hidden * x + bias_hidden)
///
/// Weights start uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases at zero,
/// drawn from a mt19937_64 stream seeded with `seed`.
class Mlp {
 public:
  Mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim, Activation activation,
      std::uint64_t seed)
      : activation_(activation), seed_(seed) {
    if (input_dim < 1 || hidden_dim < 1 || output_dim < 1)
      throw std::invalid_argument("Mlp: all dimensions must be >= 1 (got " + std::to_string(input_dim) +
                                  ", " + std::to_string(hidden_dim) + ", " + std::to_string(output_dim) + ")");
    const auto m = static_cast<Eigen::Index>(input_dim);
    const auto z = static_cast<Eigen::Index>(hidden_dim);
    const auto o = static_cast<Eigen::Index>(output_dim);
    Rng rng(seed);
    weights_hidden_.resize(z, m);
    weights_out_.resize(o, z);
    const double r1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double r2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    // Row-major fill order keeps the draw sequence independent of storage order.
    for (Eigen::Index i = 0; i < z; ++i)
      for (Eigen::Index j = 0; j < m; ++j) weights_hidden_(i, j) = uniform(rng, -r1, r1);
    for (Eigen::Index i = 0; i < o; ++i)
      for (Eigen::Index j = 0; j < z; ++j) weights_out_(i, j) = uniform(rng, -r2, r2);
    bias_hidden_ = Eigen::VectorXd::Zero(z);
    bias_out_ = Eigen::VectorXd::Zero(o);
  }

  std::size_t input_dim() const { return static_cast<std::size_t>(weights_hidden_.cols()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(weights_hidden_.rows()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(weights_out_.rows()); }
  Activation activation() const { return activation_; }
  std::uint64_t seed() const { return seed_; }

  const Eigen::MatrixXd& weights_hidden() const { return weights_hidden_; }
  const Eigen::VectorXd& bias_hidden() const { return bias_hidden_; }
  const Eigen::MatrixXd& weights_out() const { return weights_out_; }
  const Eigen::VectorXd& bias_out() const { return bias_out_; }
  Eigen::MatrixXd& weights_hidden() { return weights_hidden_; }
  Eigen::VectorXd& bias_hidden() { return bias_hidden_; }
  Eigen::MatrixXd& weights_out() { return weights_out_; }
  Eigen::VectorXd& bias_out() { return bias_out_; }

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(weights_hidden_.size() + bias_hidden_.size() + weights_out_.size() +
                                    bias_out_.size());
  }

  /// Flattened parameters in the same order as MlpGradient::flatten().
  Eigen::VectorXd parameters() const {
    MlpGradient view{weights_hidden_, bias_hidden_, weights_out_, bias_out_, 0.0};
    return view.flatten();
  }

  void set_parameters(const Eigen::VectorXd& p) {
    if (static_cast<std::size_t>(p.size()) != parameter_count())
      throw std::invalid_argument("Mlp::set_parameters: size mismatch");
    Eigen::Index o = 0;
    for (auto* m : {&weights_hidden_, &weights_out_}) {
      m->reshaped() = p.segment(o, m->size());
      o += m->size();
    }
    for (auto* b : {&bias_hidden_, &bias_out_}) {
      *b = p.segment(o, b->size());
      o += b->size();
    }
  }

  bool all_finite() const {
    return weights_hidden_.allFinite() && bias_hidden_.allFinite() && weights_out_.allFinite() &&
           bias_out_.allFinite();
  }

  /// M_NN: an upper bound on |output| over all inputs. Finite only for Sigmoid,
  /// where every activation lies in (0, 1).
  double output_bound() const {
    if (activation_ != Activation::Sigmoid) return std::numeric_limits<double>::infinity();
    return (weights_out_.cwiseAbs().rowwise().sum() + bias_out_.cwiseAbs()).maxCoeff();
  }

  Eigen::MatrixXd hidden_batch(const Eigen::MatrixXd& inputs) const {
    check_inputs(inputs);
    Eigen::MatrixXd pre = weights_hidden_ * inputs;
    pre.colwise() += bias_hidden_;
    return activate(pre);
  }

  Eigen::VectorXd hidden(const Eigen::VectorXd& x) const { return hidden_batch(x); }

  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const {
    Eigen::MatrixXd out = weights_out_ * hidden_batch(inputs);
    out.colwise() += bias_out_;
    return out;
  }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const { return forward_batch(x); }

  double loss(const Dataset& data, LossKind kind) const {
    if (data.empty()) throw std::invalid_argument("Mlp::loss: empty dataset");
    const Eigen::MatrixXd diff = forward_batch(data.inputs) - data.targets;
    const double denom = static_cast<double>(diff.size());
    return kind == LossKind::MSE ? diff.squaredNorm() / denom : diff.cwiseAbs().sum() / denom;
  }

  /// Gradient of the mean loss (over samples and outputs). L1 uses
  /// subgradient 0 where prediction equals target.
  MlpGradient gradient(const Dataset& data, LossKind kind) const {
    if (data.empty()) throw std::invalid_argument("Mlp::gradient: empty batch");
    if (data.targets.rows() != weights_out_.rows() || data.targets.cols() != data.inputs.cols())
      throw std::invalid_argument("Mlp::gradient: target shape mismatch");
    return gradient_of(data.inputs, data.targets, kind);
  }

  void apply_step(const MlpGradient& g, double lr) {
    weights_hidden_ -= lr * g.weights_hidden;
    bias_hidden_ -= lr * g.bias_hidden;
    weights_out_ -= lr * g.weights_out;
    bias_out_ -= lr * g.bias_out;
  }

  void save(std::ostream& os) const {
    os << "deepucb-mlp 1\n";
    os << "activation " << to_string(activation_) << "\n";
    os << "dims " << input_dim() << " " << hidden_dim() << " " << output_dim() << "\n";
    os << "seed " << seed_ << "\n";
    write_matrix(os, "weights_hidden", weights_hidden_);
    write_matrix(os, "bias_hidden", bias_hidden_);
    write_matrix(os, "weights_out", weights_out_);
    write_matrix(os, "bias_out", bias_out_);
  }

  static Mlp load(std::istream& is) {
    expect_token(is, "deepucb-mlp");
    int version = 0;
    is >> version;
    if (version != 1) throw SnapshotError("unsupported mlp snapshot version " + std::to_string(version));
    expect_token(is, "activation");
    std::string act;
    is >> act;
    expect_token(is, "dims");
    std::size_t m = 0, z = 0, o = 0;
    is >> m >> z >> o;
    expect_token(is, "seed");
    std::uint64_t seed = 0;
    is >> seed;
    if (!is) throw SnapshotError("truncated mlp header");
    Mlp net(m, z, o, parse_activation(act), seed);
    net.weights_hidden_ = read_matrix(is, "weights_hidden");
    net.bias_hidden_ = read_matrix(is, "bias_hidden");
    net.weights_out_ = read_matrix(is, "weights_out");
    net.bias_out_ = read_matrix(is, "bias_out");
    if (net.weights_hidden_.rows() != static_cast<Eigen::Index>(z) ||
        net.weights_hidden_.cols() != static_cast<Eigen::Index>(m) ||
        net.bias_hidden_.size() != static_cast<Eigen::Index>(z) ||
        net.weights_out_.rows() != static_cast<Eigen::Index>(o) ||
        net.weights_out_.cols() != static_cast<Eigen::Index>(z) ||
        net.bias_out_.size() != static_cast<Eigen::Index>(o))
      throw SnapshotError("mlp snapshot shapes disagree with header dims");
    return net;
  }

  bool operator==(const Mlp& other) const {
    return activation_ == other.activation_ && seed_ == other.seed_ &&
           weights_hidden_.rows() == other.weights_hidden_.rows() &&
           weights_hidden_.cols() == other.weights_hidden_.cols() &&
           weights_out_.rows() == other.weights_out_.rows() && weights_hidden_ == other.weights_hidden_ &&
           bias_hidden_ == other.bias_hidden_ && weights_out_ == other.weights_out_ &&
           bias_out_ == other.bias_out_;
  }

 private:
  friend struct TrainAccess;

  void check_inputs(const Eigen::MatrixXd& inputs) const {
    if (inputs.rows() != weights_hidden_.cols())
      throw std::invalid_argument("Mlp: input dimension " + std::to_string(inputs.rows()) + " != " +
                                  std::to_string(weights_hidden_.cols()));
    if (!inputs.allFinite()) throw std::invalid_argument("Mlp: non-finite input");
  }

  Eigen::MatrixXd activate(const Eigen::MatrixXd& pre) const {
    if (activation_ == Activation::Sigmoid)
      return pre.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    return pre.cwiseMax(0.0);
  }

  MlpGradient gradient_of(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, LossKind kind) const {
    check_inputs(x);
    Eigen::MatrixXd pre = weights_hidden_ * x;
    pre.colwise() += bias_hidden_;
    const Eigen::MatrixXd h = activate(pre);
    Eigen::MatrixXd out = weights_out_ * h;
    out.colwise() += bias_out_;
    const Eigen::MatrixXd diff = out - y;
    const double denom = static_cast<double>(diff.size());

    MlpGradient g;
    Eigen::MatrixXd d_out;
    if (kind == LossKind::MSE) {
      g.loss = diff.squaredNorm() / denom;
      d_out = (2.0 / denom) * diff;
    } else {
      g.loss = diff.cwiseAbs().sum() / denom;
      d_out = diff.unaryExpr([denom](double v) { return v > 0.0 ? 1.0 / denom : (v < 0.0 ? -1.0 / denom : 0.0); });
    }
    g.weights_out = d_out * h.transpose();
    g.bias_out = d_out.rowwise().sum();
    Eigen::MatrixXd d_pre = weights_out_.transpose() * d_out;
    if (activation_ == Activation::Sigmoid)
      d_pre.array() *= h.array() * (1.0 - h.array());
    else
      d_pre.array() *= (pre.array() > 0.0).cast<double>();
    g.weights_hidden = d_pre * x.transpose();
    g.bias_hidden = d_pre.rowwise().sum();
    return g;
  }

  Eigen::MatrixXd weights_hidden_;
  Eigen::VectorXd bias_hidden_;
  Eigen::MatrixXd weights_out_;
  Eigen::VectorXd bias_out_;
  Activation activation_;
  std::uint64_t seed_;
};

struct TrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::size_t steps = 0;
  bool reverted = false;  // final loss exceeded 1.1x initial; weights restored
};

struct TrainAccess {
  static MlpGradient batch_gradient(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                    LossKind kind) {
    return net.gradient_of(x, y, kind);
  }
};

/// Runs `schedule.epochs` passes of gradient descent in place.
///
/// Minibatch order is a fresh permutation per epoch drawn from `shuffle_seed`.
/// Throws TrainingError naming the epoch if a parameter becomes non-finite.
/// If the final training loss is more than 10% above the initial loss the
/// update is discarded and the original weights are kept.
inline TrainReport train_in_place(Mlp& net, const Dataset& data, LossKind kind, const TrainSchedule& schedule,
                                  std::uint64_t shuffle_seed = 0) {
  schedule.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (data.inputs.rows() != static_cast<Eigen::Index>(net.input_dim()) ||
      data.targets.rows() != static_cast<Eigen::Index>(net.output_dim()) ||
      data.targets.cols() != data.inputs.cols())
    throw std::invalid_argument("train: dataset shape does not match network");

  TrainReport report;
  const Mlp before = net;
  report.initial_loss = net.loss(data, kind);
  const std::size_t n = data.size();
  const bool full = schedule.batch_mode == BatchMode::FullBatch || schedule.batch_size >= n;
  Rng rng(shuffle_seed);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    const double lr = schedule.lr_at(epoch);
    if (full) {
      net.apply_step(TrainAccess::batch_gradient(net, data.inputs, data.targets, kind), lr);
      ++report.steps;
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < n; start += schedule.batch_size) {
        const std::size_t stop = std::min(n, start + schedule.batch_size);
        std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                      order.begin() + static_cast<std::ptrdiff_t>(stop));
        const Eigen::MatrixXd xb = data.inputs(Eigen::all, idx);
        const Eigen::MatrixXd yb = data.targets(Eigen::all, idx);
        net.apply_step(TrainAccess::batch_gradient(net, xb, yb, kind), lr);
        ++report.steps;
      }
    }
    if (!net.all_finite()) {
      net = before;
      throw TrainingError("training produced non-finite weights at epoch " + std::to_string(epoch) +
                              " (learning rate too high?)",
                          epoch);
    }
  }
  report.final_loss = net.loss(data, kind);
  if (report.final_loss > 1.1 * report.initial_loss) {
    net = before;
    report.final_loss = report.initial_loss;
    report.reverted = true;
  }
  return report;
}

inline Mlp train(const Mlp& net, const Dataset& data, LossKind kind, const TrainSchedule& schedule,
                 std::uint64_t shuffle_seed = 0) {
  Mlp out = net;
  train_in_place(out, data, kind, schedule, shuffle_seed);
  return out;
}

}  // namespace deepucb::nn
