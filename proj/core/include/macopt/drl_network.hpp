// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace macopt::drl {

/// Fully connected net, tanh on hidden layers, linear output. Parameters live
/// outside the object in one flat array: per layer W (out x in, row-major)
/// followed by b.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> dims);

  const std::vector<int>& dims() const noexcept { return dims_; }
  int inputs() const { return dims_.front(); }
  int outputs() const { return dims_.back(); }
  std::size_t param_count() const noexcept { return count_; }

  /// Layer inputs and the final output, kept for backward().
  struct Cache {
    std::vector<Eigen::VectorXd> acts;
  };

  Eigen::VectorXd forward(const double* params, const Eigen::VectorXd& x, Cache* cache = nullptr) const;
  /// Adds dL/dparams into grad given dL/doutput.
  void backward(const double* params, const Cache& cache, const Eigen::VectorXd& dout, double* grad) const;

 private:
  std::vector<int> dims_;
  std::size_t count_ = 0;
};

/// Running mean / variance of observations (parallel Welford merge).
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  double count = 0.0;

  explicit Normalizer(int dim = 0);
  void update(const std::vector<Eigen::VectorXd>& batch);
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// Gaussian actor-critic with a state-independent log-std.
/// params = [actor | log_std | critic].
struct PolicyState {
  Mlp actor;
  Mlp critic;
  Eigen::VectorXd params;
  Eigen::VectorXd adam_m;
  Eigen::VectorXd adam_v;
  std::int64_t adam_step = 0;
  Normalizer norm;

  int obs_dim() const { return actor.inputs(); }
  int act_dim() const { return actor.outputs(); }
  Eigen::Index log_std_offset() const { return static_cast<Eigen::Index>(actor.param_count()); }
  Eigen::Index critic_offset() const { return log_std_offset() + act_dim(); }
  Eigen::VectorXd log_std() const { return params.segment(log_std_offset(), act_dim()); }

  /// Random init (fan-in scaled normals, small actor head, log-std 0).
  static PolicyState create(int obs_dim, int act_dim, const std::vector<int>& hidden, std::uint64_t seed);
  /// All parameters zero.
  static PolicyState zeros(int obs_dim, int act_dim, const std::vector<int>& hidden);

  bool finite() const;
  friend bool operator==(const PolicyState& a, const PolicyState& b);
};

struct PolicyOutput {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_std;
  double value = 0.0;
};

/// Forward pass on a raw observation (normalized with the stored statistics).
/// Throws CorruptionError when any parameter is non-finite.
PolicyOutput policy_eval(const PolicyState& policy, const Eigen::VectorXd& obs);

/// Text checkpoint `MACOPT-POLICY v1`; every double round-trips exactly.
std::string write_policy(const PolicyState& policy);
PolicyState parse_policy(const std::string& text);
void save_policy(const PolicyState& policy, const std::string& path);
PolicyState load_policy(const std::string& path);

}  // namespace macopt::drl
