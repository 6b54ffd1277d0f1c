#pragma once

// Exponent bookkeeping for the paradifferential truncation scheme: the
// truncation exponent sigma and the derivative-loss exponents, all as exact
// rationals. The Hoelder exponent s enters only through small integer
// combinations, so s is taken as a rational too.

#include "wavepacket/common.hpp"

namespace wp {

struct LossBudget {
  Rational sigma;                    // 2/(3+s)
  Rational kappa0;                   // (d-1)/2 - d/q
  Rational kappa1;                   // (1-s)/(2(3+s))
  Rational kappa;                    // sigma - 1/2
  Rational bilinear_wave_loss;       // 4/(3+s) * (d-1)/(d+3)
  Rational interval_count_exponent;  // 2*sigma - 1
};

inline LossBudget loss_budget(Rational s, long long d, Rational q) {
  if (s.value() < 0.0 || s.value() > 1.0)
    throw ParameterError("loss_budget: s must lie in [0,1]");
  if (q.value() <= 2.0) throw ParameterError("loss_budget: q must exceed 2");
  if (d < 1) throw ParameterError("loss_budget: dimension must be positive");
  LossBudget b;
  Rational three_plus_s = Rational(3) + s;
  b.sigma = Rational(2) / three_plus_s;
  b.kappa0 = Rational(d - 1, 2) - Rational(d) / q;
  b.kappa1 = (Rational(1) - s) / (Rational(2) * three_plus_s);
  b.kappa = b.sigma - Rational(1, 2);
  b.bilinear_wave_loss =
      Rational(4) / three_plus_s * Rational(d - 1, d + 3);
  b.interval_count_exponent = Rational(2) * b.sigma - Rational(1);
  return b;
}

}  // namespace wp
