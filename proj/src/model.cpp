#include "nlslab/model.hpp"

#include <cmath>
#include <sstream>

#include "nlslab/errors.hpp"

namespace nlslab {

void validate(const ModelParams& params) {
  if (params.N < 3) {
    throw validation_error("N: dimension must be at least 3, got " +
                           std::to_string(params.N));
  }
  if (!(params.q > 2.0)) {
    throw validation_error("q: exponent must be strictly above 2, got " +
                           std::to_string(params.q));
  }
  if (!(params.q < params.mass_critical())) {
    throw validation_error(
        "q: exponent must be strictly below the mass-critical exponent 2+4/N = " +
        std::to_string(params.mass_critical()) + ", got " +
        std::to_string(params.q));
  }
  if (!(params.mu > 0.0) || !std::isfinite(params.mu)) {
    throw validation_error("mu: coupling must be positive and finite, got " +
                           std::to_string(params.mu));
  }
}

std::string describe(const ModelParams& params) {
  std::ostringstream os;
  os << "N=" << params.N << " q=" << params.q << " mu=" << params.mu;
  return os.str();
}

}  // namespace nlslab
