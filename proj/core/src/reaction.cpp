#include "fblab/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fblab/error.hpp"

namespace fblab {

std::string_view to_string(ReactionKind kind) noexcept {
  switch (kind) {
    case ReactionKind::Tumor: return "tumor";
    case ReactionKind::FisherKPP: return "fisher_kpp";
    case ReactionKind::Constant: return "constant";
    case ReactionKind::Custom: return "custom";
  }
  return "unknown";
}

double fisher_cap(double u_M, double m) { return m / (m - 1.0) * std::pow(u_M, m - 1.0); }

ReactionTerm ReactionTerm::tumor(double P_M, double P_H) {
  if (!(P_M > 0.0)) fail(ErrorCode::PreconditionViolated, "tumor law needs P_M > 0");
  if (P_H == 0.0) P_H = P_M;
  if (P_H < P_M) fail(ErrorCode::PreconditionViolated, "tumor law needs P_H >= P_M");
  ReactionTerm g;
  g.kind_ = ReactionKind::Tumor;
  g.p1_ = P_M;
  g.P_H_ = P_H;
  return g;
}

ReactionTerm ReactionTerm::fisher_kpp(double u_M, double m, double P_H) {
  if (!(u_M > 0.0)) fail(ErrorCode::PreconditionViolated, "Fisher-KPP law needs u_M > 0");
  if (!(m > 1.0)) fail(ErrorCode::PreconditionViolated, "Fisher-KPP law needs m > 1");
  if (P_H == 0.0) P_H = fisher_cap(u_M, m);
  if (!(P_H > 0.0)) fail(ErrorCode::PreconditionViolated, "P_H must be positive");
  ReactionTerm g;
  g.kind_ = ReactionKind::FisherKPP;
  g.p1_ = u_M;
  g.p2_ = m;
  g.P_H_ = P_H;
  return g;
}

ReactionTerm ReactionTerm::constant(double g0, double P_H) {
  if (!(g0 >= 0.0) || !std::isfinite(g0)) fail(ErrorCode::PreconditionViolated, "constant law needs finite g0 >= 0");
  if (!(P_H > 0.0)) fail(ErrorCode::PreconditionViolated, "P_H must be positive");
  ReactionTerm g;
  g.kind_ = ReactionKind::Constant;
  g.p1_ = g0;
  g.P_H_ = P_H;
  return g;
}

ReactionTerm ReactionTerm::custom(std::vector<double> P, std::vector<double> G, std::vector<double> dG,
                                  std::vector<double> d2G) {
  const std::size_t n = P.size();
  if (n < 2 || G.size() != n || dG.size() != n || d2G.size() != n)
    fail(ErrorCode::PreconditionViolated, "custom law needs at least two rows of equal length");
  if (P.front() != 0.0) fail(ErrorCode::PreconditionViolated, "custom table must start at P = 0");
  for (std::size_t k = 1; k < n; ++k)
    if (!(P[k] > P[k - 1])) fail(ErrorCode::PreconditionViolated, "custom table P must be increasing");
  ReactionTerm g;
  g.kind_ = ReactionKind::Custom;
  g.p1_ = G.front();
  g.P_H_ = P.back();
  g.tP_ = std::move(P);
  g.tG_ = std::move(G);
  g.tdG_ = std::move(dG);
  g.td2G_ = std::move(d2G);
  return g;
}

ReactionTerm ReactionTerm::with_cap(double P_H) const {
  if (!(P_H > 0.0)) fail(ErrorCode::PreconditionViolated, "P_H must be positive");
  if (kind_ == ReactionKind::Custom) fail(ErrorCode::PreconditionViolated, "a tabulated law keeps its own cap");
  ReactionTerm g = *this;
  g.P_H_ = P_H;
  return g;
}

std::string ReactionTerm::describe() const {
  std::ostringstream os;
  os << to_string(kind_);
  switch (kind_) {
    case ReactionKind::Tumor: os << "(P_M=" << p1_ << ")"; break;
    case ReactionKind::FisherKPP: os << "(u_M=" << p1_ << ", m=" << p2_ << ")"; break;
    case ReactionKind::Constant: os << "(g0=" << p1_ << ")"; break;
    case ReactionKind::Custom: os << "(" << tP_.size() << " rows)"; break;
  }
  os << " on [0, " << P_H_ << "]";
  return os.str();
}

double ReactionTerm::eval(double P, int order) const {
  if (!(P >= 0.0) || P > P_H_) {
    std::ostringstream os;
    os << "P = " << P << " outside [0, " << P_H_ << "]";
    fail(ErrorCode::DomainError, os.str());
  }
  return eval_unbounded(P, order);
}

double ReactionTerm::eval_unbounded(double P, int order) const {
  if (order < 0 || order > 2) fail(ErrorCode::PreconditionViolated, "derivative order must be 0, 1 or 2");
  switch (kind_) {
    case ReactionKind::Tumor:
      return order == 0 ? p1_ - P : (order == 1 ? -1.0 : 0.0);
    case ReactionKind::Constant:
      return order == 0 ? p1_ : 0.0;
    case ReactionKind::FisherKPP: {
      const double q = 1.0 / (p2_ - 1.0);
      const double k = std::pow((p2_ - 1.0) / p2_, q);
      const double Pc = std::max(P, 0.0);
      if (order == 0) return p1_ - k * std::pow(Pc, q);
      const double coef = order == 1 ? k * q : k * q * (q - 1.0);
      const double expo = q - order;
      if (coef == 0.0) return 0.0;
      if (Pc == 0.0) {
        if (expo < 0.0) fail(ErrorCode::SingularDerivative, "Fisher-KPP derivative is singular at P = 0");
        return expo == 0.0 ? -coef : 0.0;
      }
      return -coef * std::pow(Pc, expo);
    }
    case ReactionKind::Custom: {
      const double Pc = std::clamp(P, tP_.front(), tP_.back());
      auto it = std::upper_bound(tP_.begin(), tP_.end(), Pc);
      std::size_t hi = static_cast<std::size_t>(it - tP_.begin());
      hi = std::clamp<std::size_t>(hi, 1, tP_.size() - 1);
      const std::size_t lo = hi - 1;
      const double s = (Pc - tP_[lo]) / (tP_[hi] - tP_[lo]);
      const auto& col = order == 0 ? tG_ : (order == 1 ? tdG_ : td2G_);
      return (1.0 - s) * col[lo] + s * col[hi];
    }
  }
  return 0.0;
}

const ConditionResult& ConditionReport::at(std::string_view name) const {
  for (const auto& c : conditions)
    if (c.name == name) return c;
  fail(ErrorCode::PreconditionViolated, "no condition named " + std::string(name));
}

bool ConditionReport::all_satisfied() const noexcept {
  return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.satisfied; });
}

namespace {

struct Tracker {
  std::string name;
  double worst = std::numeric_limits<double>::infinity();
  double at = 0.0;
  void see(double margin, double P) {
    if (margin < worst) {
      worst = margin;
      at = P;
    }
  }
  [[nodiscard]] ConditionResult result() const {
    const double w = std::isfinite(worst) ? worst : 0.0;
    return {name, w >= -kConditionSlack, w, at};
  }
};

std::vector<double> sample_points(double P_H, int samples) {
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(samples) + 1);
  pts.push_back(0.0);
  const double lo = std::log(1e-6 * P_H), hi = std::log(P_H);
  for (int k = 0; k < samples; ++k) pts.push_back(std::exp(lo + (hi - lo) * k / (samples - 1)));
  pts.back() = P_H;
  return pts;
}

ConditionReport check_impl(const ReactionTerm& G, int samples, bool have_kl, double K, double L) {
  if (samples < 64) fail(ErrorCode::PreconditionViolated, "check_conditions needs at least 64 samples");
  ConditionReport rep;
  Tracker concav{"concavityc"}, abc{"abc"}, abc1{"abc1"}, hsc{"hsc"};
  std::vector<double> logP, logV, Ps, Vs;
  double sup_abc1 = -std::numeric_limits<double>::infinity();
  double sup_at = 0.0;

  const double G0 = G.eval(0.0, 0);
  hsc.see(G0, 0.0);

  for (double P : sample_points(G.P_H(), samples)) {
    double g = 0.0, g1 = 0.0, g2 = 0.0;
    try {
      g = G.eval(P, 0);
      g1 = G.eval(P, 1);
      g2 = G.eval(P, 2);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularDerivative) throw;
      ++rep.skipped;
      continue;
    }
    ++rep.sample_count;
    concav.see(-(3.0 * g1 + 2.0 * P * g2), P);
    abc.see(g - P * g1, P);
    if (-P * g1 > sup_abc1) {
      sup_abc1 = -P * g1;
      sup_at = P;
    }
    hsc.see(-g1, P);
    hsc.see(-g2, P);
    if (P > 0.0) {
      const double v = std::abs(g1) + std::abs(P * g2);
      Ps.push_back(P);
      Vs.push_back(v);
      if (v > 0.0) {
        logP.push_back(std::log(P));
        logV.push_back(std::log(v));
      }
    }
  }

  double gamma = 1.0;
  if (logP.size() >= 2) {
    const double n = static_cast<double>(logP.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < logP.size(); ++k) {
      sx += logP[k];
      sy += logV[k];
      sxx += logP[k] * logP[k];
      sxy += logP[k] * logV[k];
    }
    const double den = n * sxx - sx * sx;
    if (den > 0.0) gamma = (n * sxy - sx * sy) / den + 1.0;
  }
  double A = 0.0;
  for (std::size_t k = 0; k < Ps.size(); ++k) A = std::max(A, Vs[k] / std::pow(Ps[k], gamma - 1.0));
  A *= 1.0 + 1e-9;
  Tracker g0b{"g0b"};
  for (std::size_t k = 0; k < Ps.size(); ++k) g0b.see(A * std::pow(Ps[k], gamma - 1.0) - Vs[k], Ps[k]);
  if (!(gamma > 0.0)) g0b.see(gamma, 0.0);
  rep.fitted_A = A;
  rep.fitted_gamma = gamma;

  rep.abc1_sup = std::isfinite(sup_abc1) ? sup_abc1 : 0.0;
  if (have_kl) {
    if (!(L > K && K > 0.0)) fail(ErrorCode::PreconditionViolated, "abc1 needs L > K > 0");
    abc1.see((L - K) - rep.abc1_sup, sup_at);
  } else {
    abc1.see(std::isfinite(sup_abc1) ? 0.0 : -std::numeric_limits<double>::infinity(), sup_at);
  }

  rep.conditions = {concav.result(), g0b.result(), abc.result(), abc1.result(), hsc.result()};
  if (!(G0 > 0.0)) rep.conditions.back().satisfied = false;
  return rep;
}

}  // namespace

ConditionReport check_conditions(const ReactionTerm& G, int samples) {
  return check_impl(G, samples, false, 0.0, 0.0);
}

ConditionReport check_conditions(const ReactionTerm& G, int samples, double K, double L) {
  return check_impl(G, samples, true, K, L);
}

ConditionResult check_appendix_g(const ReactionTerm& G, double p, int samples) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::PreconditionViolated, "p must lie in [0, 1]");
  if (samples < 64) fail(ErrorCode::PreconditionViolated, "check_appendix_g needs at least 64 samples");
  using LD = long double;
  const LD PH = G.P_H();
  LD t0, t1;
  if (p > 0.0) {
    t1 = std::pow(PH, static_cast<LD>(p));
    t0 = t1 / samples;
  } else {
    t1 = std::log(PH);
    t0 = std::log(static_cast<LD>(1e-6) * PH);
  }
  const LD d = (t1 - t0) / samples;
  auto g = [&](LD t) -> LD {
    if (p > 0.0) {
      const LD P = std::min(std::pow(t, 1.0L / p), PH);
      return std::pow(t, 3.0L - 1.0L / p) * static_cast<LD>(G.eval(static_cast<double>(P), 0));
    }
    const LD P = std::min(std::exp(t), PH);
    return std::exp(-t) * static_cast<LD>(G.eval(static_cast<double>(P), 0));
  };
  Tracker tr{p > 0.0 ? "appendix_g" : "appendix_g0"};
  // Interior nodes only, so every stencil stays inside the sampled interval.
  for (int k = 1; k < samples; ++k) {
    const LD t = t0 + d * k;
    const LD second = (g(t - d) - 2.0L * g(t) + g(t + d)) / (d * d);
    const double P = static_cast<double>(p > 0.0 ? std::pow(t, 1.0L / p) : std::exp(t));
    tr.see(static_cast<double>(-second), P);
  }
  return tr.result();
}

}  // namespace fblab
