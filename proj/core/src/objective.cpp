#include "lookahead/objective.hpp"

#include <algorithm>
#include <stdexcept>

namespace lookahead {

const char* to_string(BetaKind kind) {
  switch (kind) {
    case BetaKind::constant_zero: return "constant_zero";
    case BetaKind::piecewise: return "piecewise";
    case BetaKind::linear_decay: return "linear_decay";
  }
  throw std::logic_error("unreachable beta kind");
}

BetaKind beta_kind_from_string(const std::string& s) {
  if (s == "constant_zero") return BetaKind::constant_zero;
  if (s == "piecewise") return BetaKind::piecewise;
  if (s == "linear_decay") return BetaKind::linear_decay;
  throw std::invalid_argument("unknown beta schedule kind: \"" + s + "\"");
}

void BetaSchedule::validate() const {
  if (beta_max < 0.0 || beta_max > 1.0) {
    throw std::invalid_argument("beta_max must lie in [0, 1]");
  }
  if (kind == BetaKind::linear_decay && cutoff == 0) {
    throw std::invalid_argument("linear_decay requires cutoff (decay length) >= 1");
  }
}

double beta_schedule(const BetaSchedule& sched, std::size_t t, std::size_t n) {
  sched.validate();
  if (t < 1 || t > n) {
    throw std::invalid_argument("token index " + std::to_string(t) +
                                " outside [1, " + std::to_string(n) + "]");
  }
  switch (sched.kind) {
    case BetaKind::constant_zero:
      return 0.0;
    case BetaKind::piecewise:
      return t <= sched.cutoff ? sched.beta_max : 0.0;
    case BetaKind::linear_decay: {
      const double frac = static_cast<double>(t - 1) / static_cast<double>(sched.cutoff);
      return sched.beta_max * std::max(0.0, 1.0 - frac);
    }
  }
  throw std::logic_error("unreachable beta kind");
}

namespace {

void check_log_probs(const std::vector<double>& logp, const char* which) {
  for (double v : logp) {
    if (v > 0.0) {
      throw std::invalid_argument(std::string(which) +
                                  " contains a positive log-probability");
    }
  }
}

}  // namespace

LossValue ce_loss(const std::vector<double>& logp_theta) {
  check_log_probs(logp_theta, "logp_theta");
  LossValue loss;
  loss.per_token.reserve(logp_theta.size());
  for (std::size_t i = 0; i < logp_theta.size(); ++i) {
    const double contribution = -logp_theta[i];
    loss.per_token.emplace_back(i + 1, contribution);
    loss.total += contribution;
  }
  return loss;
}

LossValue constrained_loss(const std::vector<double>& logp_theta,
                           const std::vector<double>& logp_ref, const BetaSchedule& sched) {
  if (logp_theta.size() != logp_ref.size()) {
    throw std::invalid_argument("logp_theta and logp_ref length mismatch: " +
                                std::to_string(logp_theta.size()) + " vs " +
                                std::to_string(logp_ref.size()));
  }
  check_log_probs(logp_theta, "logp_theta");
  check_log_probs(logp_ref, "logp_ref");
  const std::size_t n = logp_theta.size();
  LossValue loss;
  loss.per_token.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double beta = beta_schedule(sched, i + 1, n);
    const double contribution = std::max(0.0, beta * logp_ref[i] - logp_theta[i]);
    loss.per_token.emplace_back(i + 1, contribution);
    loss.total += contribution;
  }
  return loss;
}

LossValue literal_token_level_loss(const std::vector<double>& logp_theta,
                                   const std::vector<double>& logp_ref,
                                   const BetaSchedule& sched) {
  if (logp_theta.size() != logp_ref.size()) {
    throw std::invalid_argument("logp_theta and logp_ref length mismatch");
  }
  const std::size_t n = logp_theta.size();
  LossValue loss;
  loss.per_token.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double beta = beta_schedule(sched, i + 1, n);
    const double contribution = -std::max(0.0, logp_theta[i] - beta * logp_ref[i]);
    loss.per_token.emplace_back(i + 1, contribution);
    loss.total += contribution;
  }
  return loss;
}

}  // namespace lookahead
