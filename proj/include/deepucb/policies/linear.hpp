#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "deepucb/policies/policy.hpp"

namespace deepucb {

struct LinUcbConfig {
  double alpha = 1.0;
  double ridge = 1.0;               // A_i starts at ridge * I
  std::size_t refactor_every = 50;  // exact re-inversion of A_i every this many updates of arm i

  bool operator==(const LinUcbConfig&) const = default;
};

/// Disjoint-model LinUCB: per arm, A_i = ridge I + sum x x^T, b_i = sum r x,
/// theta_i = A_i^-1 b_i, score = theta_i^T x + alpha sqrt(x^T A_i^-1 x).
/// A_i^-1 is kept current with Sherman-Morrison updates and periodically
/// recomputed from A_i by Cholesky.
class LinUcb : public Policy {
 public:
  LinUcb(std::size_t n_arms, std::size_t context_dim, LinUcbConfig cfg, std::string name = "linucb")
      : Policy(std::move(name), n_arms, context_dim), cfg_(cfg) {
    if (cfg_.alpha < 0.0 || !(cfg_.ridge > 0.0)) throw std::invalid_argument(this->name() + ": need alpha >= 0, ridge > 0");
    const auto m = static_cast<Eigen::Index>(context_dim);
    arms_.assign(n_arms, ArmState{cfg_.ridge * Eigen::MatrixXd::Identity(m, m),
                                  Eigen::MatrixXd::Identity(m, m) / cfg_.ridge, Eigen::VectorXd::Zero(m), 0});
  }

  double alpha() const { return cfg_.alpha; }
  const Eigen::MatrixXd& design(std::size_t arm) const { return arms_.at(arm).a; }
  const Eigen::MatrixXd& design_inverse(std::size_t arm) const { return arms_.at(arm).a_inv; }
  const Eigen::VectorXd& response(std::size_t arm) const { return arms_.at(arm).b; }
  Eigen::VectorXd theta(std::size_t arm) const { return arms_.at(arm).a_inv * arms_.at(arm).b; }

  double score(const Eigen::VectorXd& x, std::size_t arm) const {
    const auto& s = arms_.at(arm);
    const Eigen::VectorXd ax = s.a_inv * x;
    const double mean = ax.dot(s.b);  // theta^T x, using symmetry of A^-1
    return mean + cfg_.alpha * std::sqrt(std::max(x.dot(ax), 0.0));
  }

  ArmList select(const Contexts& contexts, std::size_t t, std::size_t k) override {
    check_select_args(contexts, t, k);
    Eigen::VectorXd s(contexts.cols());
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = score(contexts.col(i), static_cast<std::size_t>(i));
    return select_top_k(s, k);
  }

  void update(const Contexts& contexts, std::span<const std::size_t> chosen, std::span<const double> rewards,
              std::size_t /*t*/) override {
    check_update_args(contexts, chosen, rewards);
    for (std::size_t j = 0; j < chosen.size(); ++j)
      observe(chosen[j], contexts.col(static_cast<Eigen::Index>(chosen[j])), rewards[j]);
  }

  void observe(std::size_t arm, const Eigen::VectorXd& x, double reward) {
    auto& s = arms_.at(arm);
    s.a.noalias() += x * x.transpose();
    s.b += reward * x;
    const Eigen::VectorXd ax = s.a_inv * x;
    s.a_inv.noalias() -= (ax * ax.transpose()) / (1.0 + x.dot(ax));
    if (++s.updates % cfg_.refactor_every == 0) refactor(s);
  }

  void save(std::ostream& os) const override {
    save_header(os);
    for (std::size_t i = 0; i < arms_.size(); ++i) {
      write_section(os, "arm" + std::to_string(i));
      os << "updates " << arms_[i].updates << "\n";
      write_matrix(os, "A", arms_[i].a);
      write_matrix(os, "A_inv", arms_[i].a_inv);
      write_matrix(os, "b", arms_[i].b);
    }
  }

  void load(std::istream& is) override {
    load_header(is);
    for (std::size_t i = 0; i < arms_.size(); ++i) {
      read_section(is, "arm" + std::to_string(i));
      expect_token(is, "updates");
      is >> arms_[i].updates;
      arms_[i].a = read_matrix(is, "A");
      arms_[i].a_inv = read_matrix(is, "A_inv");
      arms_[i].b = read_vector(is, "b");
    }
  }

 private:
  struct ArmState {
    Eigen::MatrixXd a;
    Eigen::MatrixXd a_inv;
    Eigen::VectorXd b;
    std::size_t updates;
  };

  static void refactor(ArmState& s) {
    Eigen::LLT<Eigen::MatrixXd> llt(s.a);
    if (llt.info() != Eigen::Success) throw std::runtime_error("linucb: design matrix is not positive definite");
    s.a_inv = llt.solve(Eigen::MatrixXd::Identity(s.a.rows(), s.a.cols()));
  }

  LinUcbConfig cfg_;
  std::vector<ArmState> arms_;
};

/// Per-arm ridge regression, pure exploitation: LinUCB with alpha = 0.
class LinearRegression : public LinUcb {
 public:
  LinearRegression(std::size_t n_arms, std::size_t context_dim, double ridge = 1.0)
      : LinUcb(n_arms, context_dim, LinUcbConfig{0.0, ridge, 50}, "linear") {}
};

}  // namespace deepucb
