#pragma once

#include <string>

namespace nlslab {

// Problem instance: i u_t + Lap u + mu u|u|^{q-2} + u|u|^{2*-2} = 0 on R^N,
// with mass constraint |u|_2^2 = c.  Valid range: N >= 3, 2 < q < 2 + 4/N.
struct ModelParams {
  int N = 3;
  double q = 2.5;
  double mu = 1.0;

  double two_star() const { return 2.0 * N / (N - 2.0); }
  double mass_critical() const { return 2.0 + 4.0 / N; }
};

// Throws validation_error naming the offending field and the violated range.
void validate(const ModelParams& params);

std::string describe(const ModelParams& params);

}  // namespace nlslab
