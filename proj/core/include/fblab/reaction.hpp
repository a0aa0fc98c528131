#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fblab {

enum class ReactionKind { Tumor, FisherKPP, Constant, Custom };

std::string_view to_string(ReactionKind kind) noexcept;

/// Growth law G(P) together with its first two derivatives and the cap P_H
/// on which the law is evaluated. Immutable after construction.
class ReactionTerm {
 public:
  /// G(P) = P_M - P. P_H defaults to P_M.
  static ReactionTerm tumor(double P_M, double P_H = 0.0);
  /// G(P) = u_M - ((m-1)/m)^{1/(m-1)} P^{1/(m-1)}. P_H defaults to the
  /// pressure of density u_M, i.e. m/(m-1) u_M^{m-1}.
  static ReactionTerm fisher_kpp(double u_M, double m, double P_H = 0.0);
  /// G(P) = g0 for all P.
  static ReactionTerm constant(double g0, double P_H = 1.0);
  /// Tabulated law: columns are linearly interpolated, the table spans [0, P_H].
  static ReactionTerm custom(std::vector<double> P, std::vector<double> G, std::vector<double> dG,
                             std::vector<double> d2G);

  [[nodiscard]] ReactionKind kind() const noexcept { return kind_; }
  [[nodiscard]] double P_H() const noexcept { return P_H_; }
  /// Tumor: P_M. FisherKPP: u_M. Constant: g0. Custom: G(0).
  [[nodiscard]] double parameter() const noexcept { return p1_; }
  /// FisherKPP exponent m (0 for the other kinds).
  [[nodiscard]] double m() const noexcept { return p2_; }
  [[nodiscard]] std::string describe() const;

  /// G, G' or G'' at P. Throws DomainError outside [0, P_H] and
  /// SingularDerivative where the FisherKPP derivative blows up at 0.
  [[nodiscard]] double eval(double P, int order = 0) const;

  /// Closed form without the range check, used by the solvers where a
  /// transient may step marginally past P_H. Singular points still throw.
  [[nodiscard]] double eval_unbounded(double P, int order = 0) const;

  [[nodiscard]] double G0() const { return eval_unbounded(0.0, 0); }

  /// Same law with a different evaluation cap.
  [[nodiscard]] ReactionTerm with_cap(double P_H) const;

 private:
  ReactionKind kind_ = ReactionKind::Constant;
  double p1_ = 0.0;
  double p2_ = 0.0;
  double P_H_ = 1.0;
  std::vector<double> tP_, tG_, tdG_, td2G_;
};

struct ConditionResult {
  std::string name;
  bool satisfied = false;
  double worst_margin = 0.0;
  double worst_P = 0.0;
};

struct ConditionReport {
  std::vector<ConditionResult> conditions;
  int sample_count = 0;
  int skipped = 0;
  /// Witnesses for |G'| + |P G''| <= A P^{gamma-1}.
  double fitted_A = 0.0;
  double fitted_gamma = 1.0;
  /// sup over the samples of -P G'(P); any L > K with L - K >= this works.
  double abc1_sup = 0.0;

  [[nodiscard]] const ConditionResult& at(std::string_view name) const;
  [[nodiscard]] bool all_satisfied() const noexcept;
};

inline constexpr double kConditionSlack = 1e-12;

/// Samples concavityc, g0b, abc, abc1 and hsc on a log-uniform set in
/// [1e-6 P_H, P_H] plus both endpoints.
ConditionReport check_conditions(const ReactionTerm& G, int samples = 256);

/// As above, with abc1 checked against the given L - K.
ConditionReport check_conditions(const ReactionTerm& G, int samples, double K, double L);

/// Concavity of g(t) = t^{3-1/p} G(t^{1/p}) on (0, P_H^p] (p > 0) or of
/// e^{-t} G(e^t) on [log(1e-6 P_H), log P_H] (p = 0), via second differences.
/// Margin is -g'' so that a non-negative value means concave.
ConditionResult check_appendix_g(const ReactionTerm& G, double p, int samples = 256);

/// The default pressure cap for a FisherKPP law: m/(m-1) u_M^{m-1}.
double fisher_cap(double u_M, double m);

}  // namespace fblab
