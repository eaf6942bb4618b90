#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace lookahead {

enum class BetaKind { constant_zero, piecewise, linear_decay };

const char* to_string(BetaKind kind);
BetaKind beta_kind_from_string(const std::string& s);

/// Per-token alignment coefficients beta_t in [0, 1]. `cutoff` is the last
/// supervised index still at beta_max for the piecewise kind, and the decay
/// length for linear_decay.
struct BetaSchedule {
  BetaKind kind = BetaKind::constant_zero;
  double beta_max = 0.0;
  std::size_t cutoff = 0;

  void validate() const;
};

/// beta_t for supervised token index t (1-based) in a sequence with n
/// supervised tokens. Throws if t is outside [1, n].
double beta_schedule(const BetaSchedule& sched, std::size_t t, std::size_t n);

struct LossValue {
  double total = 0.0;
  std::vector<std::pair<std::size_t, double>> per_token;  // (t, contribution)
};

/// Vanilla cross entropy over supervised log-probs: total = -sum(logp).
/// Inputs must be <= 0.
LossValue ce_loss(const std::vector<double>& logp_theta);

/// Token-level constrained loss in hinge form:
///   total = sum_t max(0, beta_t * logp_ref[t] - logp_theta[t]).
/// With beta_t == 0 this reduces exactly to ce_loss; with logp_theta ==
/// logp_ref and beta_t == 1 every token contributes 0.
LossValue constrained_loss(const std::vector<double>& logp_theta,
                           const std::vector<double>& logp_ref, const BetaSchedule& sched);

/// The uncorrected form total = -sum_t max(0, logp_theta[t] - beta_t *
/// logp_ref[t]). Diagnostic only: its total is <= 0 and at beta == 0 it is
/// identically zero, so it cannot act as a cross-entropy objective. Kept
/// behind the `literal_printed_loss` training flag for comparison runs.
LossValue literal_token_level_loss(const std::vector<double>& logp_theta,
                                   const std::vector<double>& logp_ref,
                                   const BetaSchedule& sched);

}  // namespace lookahead
