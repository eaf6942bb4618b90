#include "lookahead/objective.hpp"

#include <cmath>

#include "doctest.h"
#include "lookahead/model.hpp"

using namespace lookahead;

namespace {

std::vector<double> random_log_probs(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = -5.0 * rng.uniform();
  return v;
}

}  // namespace

TEST_SUITE("objective") {

TEST_CASE("beta schedule values") {
  BetaSchedule zero;
  for (std::size_t t = 1; t <= 9; ++t) CHECK(beta_schedule(zero, t, 9) == 0.0);

  BetaSchedule piecewise{BetaKind::piecewise, 0.9, 6};
  CHECK(beta_schedule(piecewise, 6, 10) == 0.9);
  CHECK(beta_schedule(piecewise, 7, 10) == 0.0);
  CHECK(beta_schedule(piecewise, 1, 10) == 0.9);

  BetaSchedule linear{BetaKind::linear_decay, 1.0, 4};
  CHECK(beta_schedule(linear, 1, 10) == doctest::Approx(1.0));
  CHECK(beta_schedule(linear, 3, 10) == doctest::Approx(0.5));
  CHECK(beta_schedule(linear, 5, 10) == doctest::Approx(0.0));
  CHECK(beta_schedule(linear, 9, 10) == doctest::Approx(0.0));
}

TEST_CASE("beta schedule validation") {
  BetaSchedule sched{BetaKind::piecewise, 0.5, 3};
  CHECK_THROWS_AS(beta_schedule(sched, 0, 5), std::invalid_argument);
  CHECK_THROWS_AS(beta_schedule(sched, 6, 5), std::invalid_argument);
  CHECK_THROWS_AS((BetaSchedule{BetaKind::piecewise, 1.5, 3}.validate()),
                  std::invalid_argument);
  CHECK_THROWS_AS((BetaSchedule{BetaKind::linear_decay, 0.5, 0}.validate()),
                  std::invalid_argument);
}

TEST_CASE("ce_loss on uniform and perfect predictions") {
  // Uniform model over |V| = 4: every supervised token costs ln 4.
  const double ln4 = std::log(4.0);
  const LossValue uniform = ce_loss({-ln4, -ln4, -ln4});
  CHECK(uniform.total == doctest::Approx(4.1588830833596715).epsilon(1e-12));

  const LossValue perfect = ce_loss({0.0, 0.0});
  CHECK(perfect.total == 0.0);
}

TEST_CASE("ce_loss equals the hand-computed sum") {
  // Dyadic values keep the arithmetic exact.
  const LossValue loss = ce_loss({-0.5, -1.25, -0.125, -2.0, -0.0625});
  CHECK(loss.total == 3.9375);
  REQUIRE(loss.per_token.size() == 5);
  CHECK(loss.per_token[0] == std::pair<std::size_t, double>{1, 0.5});
  CHECK(loss.per_token[3] == std::pair<std::size_t, double>{4, 2.0});
  double sum = 0.0;
  for (const auto& [t, c] : loss.per_token) {
    CHECK(c >= 0.0);
    sum += c;
  }
  CHECK(sum == doctest::Approx(loss.total).epsilon(1e-12));
}

TEST_CASE("ce_loss rejects positive log-probs") {
  CHECK_THROWS_WITH_AS(ce_loss({-0.5, 0.25}), doctest::Contains("positive"),
                       std::invalid_argument);
}

TEST_CASE("constrained_loss hand case") {
  BetaSchedule half{BetaKind::piecewise, 0.5, 100};
  const LossValue loss = constrained_loss({-2.3}, {-1.0}, half);
  CHECK(loss.total == doctest::Approx(1.8).epsilon(1e-12));
}

TEST_CASE("beta zero reduces exactly to cross entropy") {
  Rng rng(99);
  BetaSchedule zero;
  for (int rep = 0; rep < 200; ++rep) {
    const auto logp = random_log_probs(rng, 1 + rng.below(12));
    const auto ref = random_log_probs(rng, logp.size());
    const LossValue a = constrained_loss(logp, ref, zero);
    const LossValue b = ce_loss(logp);
    CHECK(std::abs(a.total - b.total) <= 1e-12);
    for (std::size_t i = 0; i < logp.size(); ++i) {
      CHECK(std::abs(a.per_token[i].second - b.per_token[i].second) <= 1e-12);
    }
  }
}

TEST_CASE("matching the reference at beta one gives exactly zero") {
  Rng rng(123);
  BetaSchedule one{BetaKind::piecewise, 1.0, 1000};
  const auto logp = random_log_probs(rng, 10);
  const LossValue loss = constrained_loss(logp, logp, one);
  CHECK(loss.total == 0.0);
}

TEST_CASE("hinge inactivity and monotonicity") {
  BetaSchedule sched{BetaKind::piecewise, 0.8, 1000};
  Rng rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    auto logp = random_log_probs(rng, 6);
    const auto ref = random_log_probs(rng, 6);
    const LossValue loss = constrained_loss(logp, ref, sched);
    CHECK(loss.total >= 0.0);
    for (std::size_t i = 0; i < 6; ++i) {
      if (logp[i] >= 0.8 * ref[i]) {
        CHECK(loss.per_token[i].second == 0.0);
      }
    }
    // Raising any single logp_theta never increases the loss.
    const std::size_t k = rng.below(6);
    auto bumped = logp;
    bumped[k] = std::min(0.0, bumped[k] + 0.5);
    CHECK(constrained_loss(bumped, ref, sched).total <= loss.total + 1e-15);
  }
}

TEST_CASE("constrained_loss validates lengths") {
  BetaSchedule zero;
  CHECK_THROWS_WITH_AS(constrained_loss({-1.0, -2.0}, {-1.0}, zero),
                       doctest::Contains("mismatch"), std::invalid_argument);
}

TEST_CASE("literal printed form is degenerate at beta zero") {
  BetaSchedule zero;
  Rng rng(31);
  const auto logp = random_log_probs(rng, 8);
  const auto ref = random_log_probs(rng, 8);
  const LossValue loss = literal_token_level_loss(logp, ref, zero);
  CHECK(loss.total == 0.0);  // log-probs are <= 0, so the inner max never fires

  // With beta = 1 and theta above the reference, the total goes negative.
  BetaSchedule one{BetaKind::piecewise, 1.0, 1000};
  const LossValue neg = literal_token_level_loss({-0.5}, {-2.0}, one);
  CHECK(neg.total == doctest::Approx(-1.5));
}

}  // TEST_SUITE
