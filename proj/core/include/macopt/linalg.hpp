// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <Eigen/Dense>

namespace macopt::linalg {

/// ln det(I + A) for Hermitian positive semidefinite A, via Cholesky.
/// When rounding leaves I + A marginally indefinite the factorization is
/// retried with a 1e-12 * trace diagonal jitter.
double log_det_i_plus(const Eigen::MatrixXcd& a);

/// ln det(M) for Hermitian positive definite M.
double log_det_hpd(const Eigen::MatrixXcd& m);

/// Inverse of a Hermitian positive definite matrix (Cholesky based, jittered
/// like log_det_i_plus on failure). The result is re-symmetrized.
Eigen::MatrixXcd inverse_hpd(const Eigen::MatrixXcd& m);

/// Solves (A + reg I) X = B for symmetric PSD A through its eigenvectors,
/// reg = rel_reg * max eigenvalue. Components of B along near-null directions
/// that are at rounding level are dropped instead of being amplified.
Eigen::MatrixXd solve_psd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rel_reg = 1e-12);

}  // namespace macopt::linalg
