#include "idrl/divergence.hpp"

#include <cmath>

namespace idrl {

namespace {
void require_finite(double x, const char* who) {
  if (!std::isfinite(x)) throw std::domain_error(std::string(who) + ": non-finite input");
}
}  // namespace

double f_value(double x) {
  require_finite(x, "f_value");
  return (x - 1.0) * (x - 1.0);
}

double f_prime(double x) {
  require_finite(x, "f_prime");
  return 2.0 * (x - 1.0);
}

double f_prime_inv(double y) {
  require_finite(y, "f_prime_inv");
  return y / 2.0 + 1.0;
}

double f_p_star(double y) {
  require_finite(y, "f_p_star");
  const double p = std::max(0.0, f_prime_inv(y));
  return p * y - f_value(p);
}

double f_p_star_prime(double y) {
  require_finite(y, "f_p_star_prime");
  return std::max(0.0, f_prime_inv(y));
}

double blend_v_terms(double v, double conj, const DivergenceSpec& spec) {
  require_finite(v, "blend_v_terms");
  require_finite(conj, "blend_v_terms");
  if (spec.mode == BlendMode::LambdaForm)
    return (1.0 - spec.lambda) * v + spec.lambda * conj;
  return v + spec.alpha * conj;
}

double blend_dv_coeff(const DivergenceSpec& spec) {
  return spec.mode == BlendMode::LambdaForm ? 1.0 - spec.lambda : 1.0;
}

double blend_conj_coeff(const DivergenceSpec& spec) {
  return spec.mode == BlendMode::LambdaForm ? spec.lambda : spec.alpha;
}

}  // namespace idrl
