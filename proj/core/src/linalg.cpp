// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/linalg.hpp"

#include <cmath>

#include "macopt/errors.hpp"

namespace macopt::linalg {

namespace {

Eigen::LLT<Eigen::MatrixXcd> factor(const Eigen::MatrixXcd& m) {
  Eigen::LLT<Eigen::MatrixXcd> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-12 * std::max(std::abs(m.trace().real()), 1.0);
  Eigen::MatrixXcd j = m;
  j.diagonal().array() += jitter;
  llt.compute(j);
  if (llt.info() != Eigen::Success) throw DomainError("matrix is not positive definite");
  return llt;
}

}  // namespace

double log_det_hpd(const Eigen::MatrixXcd& m) {
  if (m.rows() == 1) {
    const double x = m(0, 0).real();
    if (!(x > 0)) throw DomainError("matrix is not positive definite");
    return std::log(x);
  }
  const auto llt = factor(m);
  double acc = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < m.rows(); ++i) acc += std::log(l(i, i).real());
  return 2.0 * acc;
}

double log_det_i_plus(const Eigen::MatrixXcd& a) {
  if (a.rows() == 1) return std::log1p(std::max(a(0, 0).real(), -1.0 + 1e-300));
  Eigen::MatrixXcd m = a;
  m.diagonal().array() += 1.0;
  return log_det_hpd(m);
}

Eigen::MatrixXcd inverse_hpd(const Eigen::MatrixXcd& m) {
  if (m.rows() == 1) {
    const double x = m(0, 0).real();
    if (!(x > 0)) throw DomainError("matrix is not positive definite");
    return Eigen::MatrixXcd::Constant(1, 1, 1.0 / x);
  }
  const auto llt = factor(m);
  Eigen::MatrixXcd inv = llt.solve(Eigen::MatrixXcd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.adjoint());
}

Eigen::MatrixXd solve_psd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rel_reg) {
  if (a.rows() == 1) {
    const double x = a(0, 0) * (1.0 + rel_reg);
    return x > 0 ? Eigen::MatrixXd(b / x) : Eigen::MatrixXd::Zero(1, b.cols());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  const double top = ev.maxCoeff();
  const Eigen::MatrixXd& v = es.eigenvectors();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(a.rows(), b.cols());
  if (!(top > 0)) return x;
  const double reg = rel_reg * top;
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    const double bn = b.col(c).norm();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double coef = v.col(i).dot(b.col(c));
      if (ev(i) <= 1e-10 * top && std::abs(coef) <= 1e-10 * bn) continue;
      x.col(c) += coef / (ev(i) + reg) * v.col(i);
    }
  }
  return x;
}

}  // namespace macopt::linalg
