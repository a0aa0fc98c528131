#pragma once

#include <cstdint>
#include <string_view>

#include "fblab/grid.hpp"

namespace fblab {

enum class Verdict { Concave, NotConcave, Inconclusive };

std::string_view to_string(Verdict v) noexcept;

struct ConcavityOptions {
  /// tol_used = c_tol * h * max |grad P|.
  double c_tol = 10.0;
  /// Erosions of the support mask before any stencil is evaluated (at least 1).
  int erode = 1;
  std::uint64_t seed = 0x5eed;
  /// Cells with P below this fraction of max P are skipped by the Hessian detector.
  double min_relative_P = 0.0;
};

/// Verdict for f^alpha. lambda1_max is the largest eigenvalue of the Hessian
/// of P^alpha divided by the positive factor alpha P^{alpha-1} (1/P for
/// alpha = 0), i.e. the largest eigenvalue of
///   M_alpha = D^2 P - (1 - alpha) grad P grad P^T / P,
/// which carries the sign of the Hessian of P^alpha in pressure units.
struct ConcavityReport {
  double alpha = 0.0;
  double lambda1_max = 0.0;
  Index2 argmax{};
  int midpoint_violations = 0;
  int midpoint_pairs = 0;
  /// Largest midpoint excess measured in units of its tolerance.
  double midpoint_worst_ratio = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  double tol_used = 0.0;
};

/// P^alpha on the support and 0 outside (alpha > 0); log P on the support and
/// -infinity outside (alpha = 0).
ScalarField power_transform(const ScalarField& P, double alpha);

/// Largest eigenvalue of M_alpha at an interior support node (no support check).
double reduced_lambda1(const ScalarField& P, double alpha, Index2 cell);

/// Largest eigenvalue of the plain finite-difference Hessian of power_transform(P, alpha).
double direct_lambda1(const ScalarField& transformed, Index2 cell);

/// Hessian detector plus a seeded midpoint detector over pair_samples pairs.
/// Throws EmptySupport when the eroded support is empty.
ConcavityReport assess(const ScalarField& P, double alpha, int pair_samples = 1000,
                       const ConcavityOptions& opts = {});

/// Largest alpha in [lo, hi] with a Concave verdict, found by bisection.
/// Throws NotConcaveAtLo if assess(P, lo) is not Concave.
double sharp_index(const ScalarField& P, double lo, double hi, int iters, int pair_samples = 1000,
                   const ConcavityOptions& opts = {});

}  // namespace fblab
