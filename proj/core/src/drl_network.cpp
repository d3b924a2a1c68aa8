// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/drl_network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "macopt/errors.hpp"
#include "macopt/rng.hpp"
#include "macopt/scenario.hpp"

namespace macopt::drl {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr const char* kMagic = "MACOPT-POLICY v1";

}  // namespace

Mlp::Mlp(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw DimensionError("Mlp: need at least input and output sizes");
  for (int d : dims_)
    if (d <= 0) throw DimensionError("Mlp: layer sizes must be positive");
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l)
    count_ += static_cast<std::size_t>(dims_[l + 1]) * (dims_[l] + 1);
}

Eigen::VectorXd Mlp::forward(const double* params, const Eigen::VectorXd& x, Cache* cache) const {
  if (x.size() != inputs()) throw DimensionError("Mlp: input size mismatch");
  Eigen::VectorXd a = x;
  if (cache) cache->acts.assign(1, x);
  const std::size_t layers = dims_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = dims_[l], out = dims_[l + 1];
    Eigen::Map<const RowMat> w(params, out, in);
    Eigen::Map<const Eigen::VectorXd> b(params + static_cast<std::size_t>(out) * in, out);
    params += static_cast<std::size_t>(out) * (in + 1);
    Eigen::VectorXd z = w * a + b;
    if (l + 1 < layers) z = z.array().tanh().matrix();
    a = std::move(z);
    if (cache) cache->acts.push_back(a);
  }
  return a;
}

void Mlp::backward(const double* params, const Cache& cache, const Eigen::VectorXd& dout, double* grad) const {
  const std::size_t layers = dims_.size() - 1;
  std::vector<std::size_t> offset(layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offset[l] = off;
    off += static_cast<std::size_t>(dims_[l + 1]) * (dims_[l] + 1);
  }
  Eigen::VectorXd delta = dout;
  for (std::size_t l = layers; l-- > 0;) {
    const int in = dims_[l], out = dims_[l + 1];
    if (l + 1 < layers) delta = delta.cwiseProduct((1.0 - cache.acts[l + 1].array().square()).matrix());
    Eigen::Map<RowMat> gw(grad + offset[l], out, in);
    Eigen::Map<Eigen::VectorXd> gb(grad + offset[l] + static_cast<std::size_t>(out) * in, out);
    gw.noalias() += delta * cache.acts[l].transpose();
    gb += delta;
    if (l > 0) {
      Eigen::Map<const RowMat> w(params + offset[l], out, in);
      delta = w.transpose() * delta;
    }
  }
}

Normalizer::Normalizer(int dim) : mean(Eigen::VectorXd::Zero(dim)), var(Eigen::VectorXd::Ones(dim)) {}

void Normalizer::update(const std::vector<Eigen::VectorXd>& batch) {
  if (batch.empty()) return;
  const double nb = static_cast<double>(batch.size());
  Eigen::VectorXd bm = Eigen::VectorXd::Zero(mean.size());
  for (const auto& x : batch) bm += x;
  bm /= nb;
  Eigen::VectorXd bv = Eigen::VectorXd::Zero(mean.size());
  for (const auto& x : batch) bv += (x - bm).cwiseAbs2();
  bv /= nb;
  const double total = count + nb;
  const Eigen::VectorXd d = bm - mean;
  const Eigen::VectorXd m2 = var * count + bv * nb + d.cwiseAbs2() * (count * nb / total);
  mean += d * (nb / total);
  var = m2 / total;
  count = total;
}

Eigen::VectorXd Normalizer::apply(const Eigen::VectorXd& x) const {
  if (count == 0.0) return x;
  Eigen::VectorXd z = ((x - mean).array() / (var.array() + 1e-8).sqrt()).matrix();
  return z.cwiseMax(-10.0).cwiseMin(10.0);
}

PolicyState PolicyState::zeros(int obs_dim, int act_dim, const std::vector<int>& hidden) {
  PolicyState s;
  std::vector<int> dims{obs_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(act_dim);
  s.actor = Mlp(dims);
  dims.back() = 1;
  s.critic = Mlp(dims);
  const Eigen::Index n = static_cast<Eigen::Index>(s.actor.param_count() + act_dim + s.critic.param_count());
  s.params = Eigen::VectorXd::Zero(n);
  s.adam_m = Eigen::VectorXd::Zero(n);
  s.adam_v = Eigen::VectorXd::Zero(n);
  s.norm = Normalizer(obs_dim);
  return s;
}

PolicyState PolicyState::create(int obs_dim, int act_dim, const std::vector<int>& hidden, std::uint64_t seed) {
  PolicyState s = zeros(obs_dim, act_dim, hidden);
  CounterRng rng(seed);
  auto init = [&](const Mlp& net, double* w, double head_scale) {
    const auto& d = net.dims();
    for (std::size_t l = 0; l + 1 < d.size(); ++l) {
      const double scale = (l + 2 == d.size() ? head_scale : 1.0) / std::sqrt(static_cast<double>(d[l]));
      const std::size_t nw = static_cast<std::size_t>(d[l + 1]) * d[l];
      for (std::size_t i = 0; i < nw; ++i) w[i] = scale * rng.normal();
      w += nw + d[l + 1];
    }
  };
  init(s.actor, s.params.data(), 0.01);
  init(s.critic, s.params.data() + s.critic_offset(), 1.0);
  return s;
}

bool PolicyState::finite() const { return params.allFinite() && adam_m.allFinite() && adam_v.allFinite(); }

bool operator==(const PolicyState& a, const PolicyState& b) {
  return a.actor.dims() == b.actor.dims() && a.critic.dims() == b.critic.dims() && a.params == b.params &&
         a.adam_m == b.adam_m && a.adam_v == b.adam_v && a.adam_step == b.adam_step &&
         a.norm.mean == b.norm.mean && a.norm.var == b.norm.var && a.norm.count == b.norm.count;
}

PolicyOutput policy_eval(const PolicyState& policy, const Eigen::VectorXd& obs) {
  if (!policy.params.allFinite()) throw CorruptionError("policy_eval: non-finite policy parameters");
  if (!obs.allFinite()) throw DomainError("policy_eval: non-finite observation");
  const Eigen::VectorXd x = policy.norm.apply(obs);
  PolicyOutput out;
  out.mean = policy.actor.forward(policy.params.data(), x);
  out.log_std = policy.log_std().cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  out.value = policy.critic.forward(policy.params.data() + policy.critic_offset(), x)(0);
  return out;
}

namespace {

void write_vec(std::ostringstream& os, const char* key, const Eigen::VectorXd& v) {
  os << key << ' ' << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << format_double(v(i));
  os << '\n';
}

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  std::istringstream& line(const char* key) {
    std::string l;
    if (!std::getline(in_, l)) throw ParseError(std::string("missing '") + key + "'", no_ + 1);
    ++no_;
    cur_.clear();
    cur_.str(l);
    std::string k;
    cur_ >> k;
    if (k != key) throw ParseError(std::string("expected '") + key + "'", no_);
    return cur_;
  }

  double number() {
    std::string tok;
    double v = 0.0;
    if (!(cur_ >> tok) || !parse_double(tok, v)) throw ParseError("bad number", no_);
    return v;
  }

  long long integer() {
    const double v = number();
    if (v != std::floor(v)) throw ParseError("expected an integer", no_);
    return static_cast<long long>(v);
  }

  Eigen::VectorXd vec(const char* key, Eigen::Index expect) {
    line(key);
    const long long n = integer();
    if (n != expect) throw ParseError(std::string("'") + key + "' has the wrong length", no_);
    Eigen::VectorXd v(n);
    for (long long i = 0; i < n; ++i) v(i) = number();
    return v;
  }

  std::size_t line_no() const { return no_; }

 private:
  std::istringstream in_;
  std::istringstream cur_;
  std::size_t no_ = 0;
};

}  // namespace

std::string write_policy(const PolicyState& policy) {
  std::ostringstream os;
  os << kMagic << '\n';
  os << "dims " << policy.actor.dims().size();
  for (int d : policy.actor.dims()) os << ' ' << d;
  os << '\n';
  write_vec(os, "params", policy.params);
  write_vec(os, "adam_m", policy.adam_m);
  write_vec(os, "adam_v", policy.adam_v);
  os << "adam_step " << policy.adam_step << '\n';
  write_vec(os, "norm_mean", policy.norm.mean);
  write_vec(os, "norm_var", policy.norm.var);
  os << "norm_count " << format_double(policy.norm.count) << '\n';
  return os.str();
}

PolicyState parse_policy(const std::string& text) {
  Reader r(text);
  {
    std::string first = text.substr(0, text.find('\n'));
    if (first != kMagic) throw ParseError("not a MACOPT-POLICY v1 file", 1);
    r.line("MACOPT-POLICY");
  }
  r.line("dims");
  const long long nd = r.integer();
  if (nd < 2 || nd > 64) throw ParseError("bad layer count", r.line_no());
  std::vector<int> dims(static_cast<std::size_t>(nd));
  for (auto& d : dims) {
    const long long v = r.integer();
    if (v <= 0 || v > 1 << 20) throw ParseError("bad layer size", r.line_no());
    d = static_cast<int>(v);
  }
  std::vector<int> hidden(dims.begin() + 1, dims.end() - 1);
  PolicyState s = PolicyState::zeros(dims.front(), dims.back(), hidden);
  s.params = r.vec("params", s.params.size());
  s.adam_m = r.vec("adam_m", s.params.size());
  s.adam_v = r.vec("adam_v", s.params.size());
  r.line("adam_step");
  s.adam_step = r.integer();
  s.norm.mean = r.vec("norm_mean", dims.front());
  s.norm.var = r.vec("norm_var", dims.front());
  r.line("norm_count");
  s.norm.count = r.number();
  if (!s.finite()) throw CorruptionError("policy checkpoint holds non-finite parameters");
  return s;
}

void save_policy(const PolicyState& policy, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << write_policy(policy);
  if (!f) throw Error("write failed for '" + path + "'");
}

PolicyState load_policy(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_policy(ss.str());
}

}  // namespace macopt::drl
