#pragma once

#include <vector>

#include "fblab/grid.hpp"
#include "fblab/reaction.hpp"

namespace fblab {

/// Constants of the initial-data hypotheses: K (semi-superharmonicity),
/// L > K (bound on -P G'), c_lower and C_upper (non-degeneracy and gradient),
/// and r = m - 1.
struct EstimateConfig {
  double K = 1.0;
  double L = 2.0;
  double c_lower = 1.0;
  double C_upper = 1.0;
  double r = 1.0;

  /// Throws ConfigError unless L > K > 0, c_lower > 0, C_upper > 0, r > 0.
  void validate() const;
};

struct EstimateReport {
  double t = 0.0;
  double ab_margin = 0.0;
  double grad_margin = 0.0;
  double nondeg_margin = 0.0;
  /// Same inequality with e^{-K r t} in place of e^{-r L t}.
  double nondeg_margin_K = 0.0;
};

/// The required lower bound -K / (1 + r K t).
double ab_required_bound(double K, double r, double t);

/// min over the eroded support of Lap P + G(P) + K / (1 + r K t).
double aronson_benilan_margin(const ScalarField& P, const ReactionTerm& G, const EstimateConfig& cfg, double t,
                              int erode = 1);

/// max over the support of |grad P| with one-sided interior differences at the edge.
double max_gradient_on_support(const ScalarField& P);

/// C_upper e^{r G0 t} - max |grad P|.
double gradient_bound_margin(const ScalarField& P, const EstimateConfig& cfg, double G0, double t);

/// min over the eroded support of
///   [1 + (t + a) r G(P)] P + (t + a)(1 + r/2) |grad P|^2 - c/(K r + 2) e^{-r L t},
/// with a = 2/(K r + 2). With use_L = false the exponent is -K r t.
double nondegeneracy_margin(const ScalarField& P, const ReactionTerm& G, const EstimateConfig& cfg, double t,
                            int erode = 1, bool use_L = true);

EstimateReport evaluate_estimates(const ScalarField& P, const ReactionTerm& G, const EstimateConfig& cfg, double t,
                                  int erode = 1);

/// Checks the hypotheses on the initial field (AB constant, non-degeneracy
/// and gradient constants, abc1 sup) and throws ConfigError when any fails.
void validate_initial(const ScalarField& P0, const ReactionTerm& G, const EstimateConfig& cfg, double tol,
                      int erode = 1);

/// Tightest constants that the initial field satisfies, inflated by (1 + slack).
EstimateConfig fit_initial_config(const ScalarField& P0, const ReactionTerm& G, double r, double slack = 0.05,
                                  int erode = 1);

/// Median over `rays` rays from the support centroid of the exponent beta in
/// P ~ (r_b - r)^beta, from the slope of P/|dP/dr| over the last `cells`
/// samples above floor * max P (which keeps the smeared front tail out).
double boundary_decay_exponent(const ScalarField& P, int rays = 32, int cells = 8, double floor = 0.05);

}  // namespace fblab
