#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "fblab/grid.hpp"
#include "fblab/reaction.hpp"

namespace fblab {

enum class CexCase { LowAlpha, AlphaOne, MidAlpha };

std::string_view to_string(CexCase c) noexcept;

/// Initial-data parameters for the instantaneous loss of alpha-concavity.
/// Coordinates: x1 is the grid x axis, the transverse axis is y.
struct CexParams {
  double alpha = 0.0;
  double m = 2.0;
  CexCase kase = CexCase::LowAlpha;
  double a = 0.0;  // LowAlpha and AlphaOne
  double b = 0.0;  // MidAlpha
  double c = 1.0;
  double rho = 0.1;
  double A_ext = 1.0;

  [[nodiscard]] double a_or_b() const noexcept { return kase == CexCase::MidAlpha ? b : a; }
  /// Throws ParamsInconsistent if the case does not match alpha or a value is out of range.
  void validate() const;
};

struct Monomial {
  double coef = 0.0;
  int px = 0;
  int py = 0;
};

/// Monomials of w for the case: the Case-1 quartic (alpha in (0, 1/2) and
/// alpha = 1), its gradient-a variant for alpha = 0, and the Case-3 quartic.
std::vector<Monomial> w_monomials(const CexParams& p);

/// d^{dx+dy} / dx^dx dy^dy of the polynomial at (x, y).
double eval_poly(const std::vector<Monomial>& poly, double x, double y, int dx = 0, int dy = 0);

/// Exact cellwise evaluation of w.
ScalarField build_w(const CexParams& p, const Grid& grid);

/// Right-hand side of the equation for w = P^alpha (log P when alpha = 0)
/// at (x, y) using exact derivatives of the polynomial w.
double w_time_derivative(const CexParams& p, const ReactionTerm& G, double x, double y);

/// d/dt w_11 at the origin (N = 2) from the general chain-rule expansion.
double dt_w11_origin(const CexParams& p, const ReactionTerm& G);

/// Sampled check that the Hessian of w is negative definite on B_rho minus the origin.
bool hessian_negative_definite(const CexParams& p, double rho, int radial = 48, int angular = 96);

/// Doubling search on a (or b) from 2 up to 2^20; see the case rules in the
/// implementation. Throws PreconditionViolated for alpha = 1/2 and SearchFailed.
CexParams choose_params(double alpha, double m, const ReactionTerm& G);

/// The cutoff Phi: 1 on B_{rho/2}, 0 outside B_{3 rho/4}, quintic in between.
double cutoff(double r, double rho);

/// Pointwise w~ = L + Phi (w - L) - A_ext (r/rho)^12 with L = c + w_1(0) x.
/// The extension term is flat inside B_{rho/4} and leaves every derivative of order <= 4 at the origin untouched.
double w_tilde(const CexParams& p, double x, double y);

/// Grid of the given cell count sized to the support of w~ at the current A_ext.
/// For alpha = 0 the support is {w~ > c - 20}.
Grid counterexample_grid(const CexParams& p, int cells = 256);

/// Samples w~ from the field w, doubling A_ext from 1 (stored back into p)
/// until the discrete Hessian is negative semidefinite on the eroded
/// support. Throws ExtensionFailed past 2^20.
ScalarField extend_to_ball(const ScalarField& w, CexParams& p);

/// P0 = w~^{1/alpha} (alpha > 0) or e^{w~} cut 20 below its peak (alpha = 0).
ScalarField initial_pressure(const ScalarField& w_tilde_field, double alpha);

struct TrackOptions {
  double T = 0.05;
  double cfl = 0.9;
  /// 0 picks ten initial stable time steps.
  double snapshot_dt = 0.0;
  double c_tol = 10.0;
  bool stop_on_detection = true;
  /// Snapshots kept after the first detection before stopping.
  int extra_snapshots = 3;
};

struct CexVerdict {
  std::vector<std::pair<double, double>> lambda1_series;
  std::vector<double> tol_series;
  std::optional<double> first_positive_t;
  double radius = 0.0;
  /// The run ended because the support reached the grid frame.
  bool hit_boundary = false;
};

/// Simulates from P0 and tracks the largest eigenvalue of the plain Hessian
/// of P^alpha over the nodes of B_radius whose 5x5 stencil lies in the
/// support. Each node carries the truncation error of its Hessian,
/// tol = c_tol h^2/12 times its largest fourth difference plus a round-off
/// floor; loss is flagged once some node has lambda1 > 3 tol. The series
/// holds the ball maximum of lambda1 and the tol of the node attaining it.
CexVerdict track_concavity_loss(const ScalarField& P0, double alpha, double m, const ReactionTerm& G, double radius,
                                const TrackOptions& opts = {});

/// Builds w, extends it, converts to pressure and tracks over B_{rho/4}.
CexVerdict run_counterexample(CexParams& p, const ReactionTerm& G, const TrackOptions& opts = {}, int cells = 256);

}  // namespace fblab
