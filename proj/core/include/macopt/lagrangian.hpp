// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <span>
#include <vector>

#include "macopt/capacity.hpp"
#include "macopt/channel.hpp"

namespace macopt {

struct InnerOptions {
  /// Projected-gradient stationarity tolerance, relative to max(1, max theta).
  double grad_tol = 1e-9;
  int max_iters = 200;
};

/// Phi(p) = sum_u lambda_u R_u(p, order) - sum_u theta_u sum_n p(u, n).
/// Any order is accepted; Phi is concave in p only when lambda ascends along
/// the order.
double lagrangian_value(const ChannelSlice& h, std::span<const double> lambda, std::span<const double> theta,
                        const DecodingOrder& order, const PowerMatrix& p, double sigma2);

/// d Phi / d p(u, n) from the telescoped log-det form.
Eigen::MatrixXd lagrangian_gradient(const ChannelSlice& h, std::span<const double> lambda,
                                    std::span<const double> theta, const DecodingOrder& order,
                                    const PowerMatrix& p, double sigma2);

/// Maximizes Phi over p >= 0. The order must list users by ascending lambda
/// (ContractError otherwise). Subcarriers are solved independently by a
/// projected Newton method with Armijo backtracking (c = 1e-4, shrink 0.5).
/// `warm_start`, when given, seeds the iteration.
Allocation inner_lagrangian_opt(const ChannelSlice& h, std::span<const double> lambda,
                                std::span<const double> theta, const DecodingOrder& order, double sigma2,
                                InnerOptions options = {}, const PowerMatrix* warm_start = nullptr);

/// Largest projected-gradient violation of Phi at p (0 at an exact maximizer).
double inner_stationarity(const ChannelSlice& h, std::span<const double> lambda, std::span<const double> theta,
                          const DecodingOrder& order, const PowerMatrix& p, double sigma2);

/// Users sorted by ascending lambda, ties broken by ascending index.
DecodingOrder ascending_lambda_order(std::span<const double> lambda);

namespace detail {

/// Concave objective sum_k coeff[k] F_k(x) / ln 2 - theta . x where F_k is the
/// log-det of the users at positions >= k of `order`. coeff[k] >= 0.
struct ChainObjective {
  DecodingOrder order;
  std::vector<double> coeff;
  std::vector<double> theta;
  double sigma2 = 1.0;

  static ChainObjective from_lambda(std::span<const double> lambda, std::span<const double> theta,
                                    const DecodingOrder& order, double sigma2);
};

struct ChainEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

ChainEval evaluate_chain(const ChannelSlice& h, int n, const ChainObjective& obj,
                         const Eigen::Ref<const Eigen::VectorXd>& x, bool want_hessian);

/// Projected Newton ascent on every subcarrier; p is updated in place.
/// Returns the worst final projected-gradient violation.
double maximize_chain(const ChannelSlice& h, const ChainObjective& obj, PowerMatrix& p,
                      const InnerOptions& options);

}  // namespace detail

}  // namespace macopt
