#pragma once

#include <stdexcept>
#include <string>

namespace idrl {

enum class DivergenceKind { ChiSquared };
enum class BlendMode { AlphaForm, LambdaForm };

// Convex generator f of the f-divergence plus its derived conjugates.
// Only Pearson chi-squared is instantiated: f(x) = (x-1)^2.
//
// f_p_star is the non-negativity-constrained conjugate
//   f_p*(y) = max(0, f'^{-1}(y)) * y - f(max(0, f'^{-1}(y)))
// which for chi-squared is y*(y/4 + 1) on y >= -2 and the constant -1 below.
struct DivergenceSpec {
  DivergenceKind kind = DivergenceKind::ChiSquared;
  double alpha = 1.0;    // regularization strength, > 0 (alpha-form)
  double lambda = 0.6;   // trade-off weight in (0,1) (lambda-form)
  BlendMode mode = BlendMode::LambdaForm;

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("DivergenceSpec: alpha must be > 0");
    if (!(lambda > 0.0 && lambda < 1.0))
      throw std::invalid_argument("DivergenceSpec: lambda must be in (0,1)");
  }

  // Argument scale applied inside the conjugate: alpha in alpha-form, 1 otherwise.
  double conj_scale() const { return mode == BlendMode::AlphaForm ? alpha : 1.0; }
};

double f_value(double x);
double f_prime(double x);
double f_prime_inv(double y);
double f_p_star(double y);
double f_p_star_prime(double y);

// Combines the linear V-term with the conjugate term of the dual objective.
// conj must already be evaluated at the appropriately scaled argument.
double blend_v_terms(double v, double conj, const DivergenceSpec& spec);

// Derivative of blend_v_terms with respect to a residual y = (Q - V)/scale,
// split so callers can assemble chain rules:
//   d(blend)/dV   = dv_coeff(spec) + conj_coeff(spec) * f_p_star_prime(y) * (-1/scale)
double blend_dv_coeff(const DivergenceSpec& spec);
double blend_conj_coeff(const DivergenceSpec& spec);

}  // namespace idrl
