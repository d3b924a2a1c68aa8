// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <Eigen/Dense>

#include "macopt/capacity.hpp"
#include "macopt/channel.hpp"

namespace macopt::detail {

/// F(x) = ln det(I + sigma^-2 sum_{u in S} x_u h_u h_u^H) on one subcarrier,
/// with its gradient and Hessian in the per-user powers x. Entries for users
/// outside S are zero.
struct SetLogDet {
  double value = 0.0;
  Eigen::VectorXd grad;  ///< grad_u = h_u^H M^-1 h_u, M = sigma^2 I + sum x h h^H
  Eigen::MatrixXd hess;  ///< hess_uv = -|h_u^H M^-1 h_v|^2
};

SetLogDet set_logdet(const ChannelSlice& h, int n, const Eigen::Ref<const Eigen::VectorXd>& x,
                     UserSet subset, double sigma2, bool want_hessian);

/// Users at positions >= k of the order, as a bitmask.
inline UserSet suffix_set(const DecodingOrder& order, int k) {
  UserSet s = 0;
  for (std::size_t j = static_cast<std::size_t>(k); j < order.perm.size(); ++j) s |= UserSet{1} << order.perm[j];
  return s;
}

}  // namespace macopt::detail
