#include "tdbsde/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace tdbsde {

double contraction_threshold(Variant v) { return v == Variant::plain ? 1.0 / 25.0 : 1.0 / 36.0; }
double contraction_factor(Variant v) { return v == Variant::plain ? 10.0 : 18.0; }

namespace {

void require_horizon(double T, const DelayMeasure& a1, const DelayMeasure& a2,
                     const WeightFunction& u, const WeightFunction& v, const char* who) {
  if (a1.horizon() != T || a2.horizon() != T || u.horizon() != T || v.horizon() != T)
    throw UsageError(std::string(who) + ": measures and weights live on different horizons");
}

void require_nonnegative(double x, const char* name) {
  if (!std::isfinite(x) || x < 0.0)
    throw UsageError(std::string(name) + " must be finite and nonnegative");
}

}  // namespace

ContractionReport check_contraction(double K, const DelayMeasure& alpha1, const DelayMeasure& alpha2,
                                    const WeightFunction& u, const WeightFunction& v,
                                    Variant variant) {
  require_horizon(alpha1.horizon(), alpha1, alpha2, u, v, "check_contraction");
  require_nonnegative(K, "check_contraction: K");
  ContractionReport r;
  r.variant = variant;
  const double a1 = alpha1.total_mass();
  const double a2 = alpha2.total_mass();
  const double u_l1 = weight_norms(u).l1;
  const double v_l2sq = weight_norms(v).l2sq;
  r.lhs_y = K * K * a1 * a1 * u_l1 * u_l1;
  r.lhs_z = K * K * a2 * a2 * v_l2sq;
  r.threshold = contraction_threshold(variant);
  r.modulus = contraction_factor(variant) * (r.lhs_y + r.lhs_z);
  const double limit = r.threshold + kBoundaryTolerance;
  r.satisfied = r.lhs_y <= limit && r.lhs_z <= limit;
  auto flag_boundary = [&](double lhs, const char* leg) {
    if (std::abs(lhs - r.threshold) <= kBoundaryTolerance) {
      std::ostringstream w;
      w << "boundary: " << leg << " equals the threshold " << r.threshold
        << "; the contraction estimate is not strict here";
      r.warnings.push_back(w.str());
    }
  };
  flag_boundary(r.lhs_y, "lhsY");
  flag_boundary(r.lhs_z, "lhsZ");
  if (r.satisfied && r.modulus >= 1.0)
    r.warnings.push_back("modulus >= 1: Picard decay relies on the measured, not the proven, rate");
  return r;
}

double apriori_bound(double K, const DelayMeasure& alpha1, const DelayMeasure& alpha2,
                     const WeightFunction& u, const WeightFunction& v, double xi_diff_l2sq,
                     double y_diff_s2sq, double z_diff_h2sq) {
  require_horizon(alpha1.horizon(), alpha1, alpha2, u, v, "apriori_bound");
  require_nonnegative(K, "apriori_bound: K");
  require_nonnegative(xi_diff_l2sq, "apriori_bound: terminal difference");
  require_nonnegative(y_diff_s2sq, "apriori_bound: y difference");
  require_nonnegative(z_diff_h2sq, "apriori_bound: z difference");
  const double a1 = alpha1.total_mass();
  const double a2 = alpha2.total_mass();
  const double u_l1 = weight_norms(u).l1;
  const double v_l2sq = weight_norms(v).l2sq;
  return 20.0 * K * K * a1 * a1 * u_l1 * u_l1 * y_diff_s2sq + 10.0 * xi_diff_l2sq +
         20.0 * K * K * a2 * a2 * v_l2sq * z_diff_h2sq;
}

double stability_bound(double K, const WeightFunction& u, const WeightFunction& v,
                       double mass_gap_y, double mass_gap_z, double y_s2sq, double z_h2sq) {
  if (u.horizon() != v.horizon())
    throw UsageError("stability_bound: weights live on different horizons");
  require_nonnegative(K, "stability_bound: K");
  require_nonnegative(mass_gap_y, "stability_bound: mass gap (Y)");
  require_nonnegative(mass_gap_z, "stability_bound: mass gap (Z)");
  require_nonnegative(y_s2sq, "stability_bound: |Y|^2");
  require_nonnegative(z_h2sq, "stability_bound: |Z|^2");
  const double u_l1 = weight_norms(u).l1;
  const double v_l2sq = weight_norms(v).l2sq;
  return 100.0 * K * K *
         (mass_gap_y * mass_gap_y * u_l1 * u_l1 * y_s2sq +
          mass_gap_z * mass_gap_z * v_l2sq * z_h2sq);
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::not_checked:
      return "not-checked";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Sampling helpers

namespace {

class BoxSampler {
 public:
  BoxSampler(std::uint64_t seed, double radius) : engine_(seed), radius_(radius) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double coord() { return radius_ * (2.0 * uniform01() - 1.0); }
  Eigen::MatrixXd box(Index rows, Index cols) {
    Eigen::MatrixXd out(rows, cols);
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) out(r, c) = coord();
    return out;
  }

 private:
  std::mt19937_64 engine_;
  double radius_;
};

constexpr int kBatch = 100;

struct Probe {
  double y_secant = 0.0;       // max |g(y,z) - g(y',z)| / |y - y'|
  double mixed = 0.0;          // max |g(y,z)-g(y',z)-g(y,z')+g(y',z')| / (|dy|+|dz|)
  double growth_lin = 0.0;     // max |g| / (1 + |z|)
  double growth_quad = 0.0;    // max |g| / (1 + |z|^2)
  double min_y_increment = 0.0;  // min (g(y') - g(y)) over y' > y, m = 1 only
  double z_cross = 0.0;        // max change of g^i under perturbation of rows != i
};

Probe probe_generator(const GeneratorSpec& g, double horizon, int pairs, double radius,
                      std::uint64_t seed) {
  BoxSampler rs(seed, radius);
  Probe p;
  p.min_y_increment = std::numeric_limits<double>::infinity();
  const int m = g.m;
  const int d = g.d;
  for (int done = 0; done < pairs; done += kBatch) {
    const double t = horizon * rs.uniform01();
    const Eigen::MatrixXd y1 = rs.box(kBatch, m);
    const Eigen::MatrixXd y2 = rs.box(kBatch, m);
    const Eigen::MatrixXd z1 = rs.box(kBatch, m * d);
    const Eigen::MatrixXd z2 = rs.box(kBatch, m * d);
    const Eigen::MatrixXd state = Eigen::MatrixXd::Zero(kBatch, d);
    const Eigen::MatrixXd g11 = g.eval(t, y1, z1, state);
    const Eigen::MatrixXd g21 = g.eval(t, y2, z1, state);
    const Eigen::MatrixXd g12 = g.eval(t, y1, z2, state);
    const Eigen::MatrixXd g22 = g.eval(t, y2, z2, state);
    for (Index r = 0; r < kBatch; ++r) {
      const double dy = (y1.row(r) - y2.row(r)).norm();
      const double dz = (z1.row(r) - z2.row(r)).norm();
      if (dy > 0) p.y_secant = std::max(p.y_secant, (g11.row(r) - g21.row(r)).norm() / dy);
      if (dy + dz > 0)
        p.mixed = std::max(p.mixed,
                           (g11.row(r) - g21.row(r) - g12.row(r) + g22.row(r)).norm() / (dy + dz));
      const double zn = z1.row(r).norm();
      const double gn = g11.row(r).norm();
      p.growth_lin = std::max(p.growth_lin, gn / (1.0 + zn));
      p.growth_quad = std::max(p.growth_quad, gn / (1.0 + zn * zn));
      if (m == 1) {
        const double inc = y1(r, 0) > y2(r, 0) ? g11(r, 0) - g21(r, 0) : g21(r, 0) - g11(r, 0);
        if (y1(r, 0) != y2(r, 0)) p.min_y_increment = std::min(p.min_y_increment, inc);
      }
    }
    if (m > 1) {
      // Perturb every row of z except row i and watch component i.
      for (int i = 0; i < m; ++i) {
        Eigen::MatrixXd zp = z1;
        for (int k = 0; k < m; ++k)
          if (k != i) zp.middleCols(k * d, d) = z2.middleCols(k * d, d);
        const Eigen::MatrixXd gp = g.eval(t, y1, zp, state);
        p.z_cross = std::max(p.z_cross, (gp.col(i) - g11.col(i)).cwiseAbs().maxCoeff());
      }
    }
  }
  return p;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

SecantSample sample_secant_slope(const GeneratorSpec& g, double horizon, int pairs, double radius,
                                 std::uint64_t seed) {
  if (!g.eval) throw UsageError("sample_secant_slope: generator has no driver");
  BoxSampler rs(seed, radius);
  SecantSample out;
  const int m = g.m;
  const int d = g.d;
  for (int done = 0; done < pairs; done += kBatch) {
    const double t = horizon * rs.uniform01();
    const Eigen::MatrixXd y1 = rs.box(kBatch, m);
    const Eigen::MatrixXd y2 = rs.box(kBatch, m);
    const Eigen::MatrixXd z1 = rs.box(kBatch, m * d);
    const Eigen::MatrixXd z2 = rs.box(kBatch, m * d);
    const Eigen::MatrixXd state = Eigen::MatrixXd::Zero(kBatch, d);
    const Eigen::MatrixXd g1 = g.eval(t, y1, z1, state);
    const Eigen::MatrixXd g2 = g.eval(t, y2, z2, state);
    for (Index r = 0; r < kBatch; ++r) {
      const double denom = (y1.row(r) - y2.row(r)).norm() + (z1.row(r) - z2.row(r)).norm();
      if (denom > 0) out.max_slope = std::max(out.max_slope, (g1.row(r) - g2.row(r)).norm() / denom);
    }
    out.pairs += kBatch;
  }
  return out;
}

std::vector<AssumptionResult> validate_assumptions(const AssumptionInputs& in) {
  std::vector<AssumptionResult> out;
  auto add = [&](std::string id, Verdict v, std::string msg) {
    out.push_back({std::move(id), v, std::move(msg)});
  };

  // A1
  if (in.alpha1 == nullptr || in.alpha2 == nullptr) {
    add("A1", Verdict::not_checked, "delay measures not supplied");
  } else if (auto bad = measure_defect(in.horizon, *in.alpha1)) {
    add("A1", Verdict::fail, "alpha1: " + *bad);
  } else if (auto bad2 = measure_defect(in.horizon, *in.alpha2)) {
    add("A1", Verdict::fail, "alpha2: " + *bad2);
  } else {
    add("A1", Verdict::pass, "finite nonnegative measures supported on [-T, 0]");
  }

  // A2
  if (in.u == nullptr || in.v == nullptr) {
    add("A2", Verdict::not_checked, "weights not supplied");
  } else {
    try {
      const auto nu = weight_norms(*in.u);
      const auto nv = weight_norms(*in.v);
      if (std::isfinite(nu.l1) && std::isfinite(nv.l2sq))
        add("A2", Verdict::pass, "|u|_L1 = " + fmt(nu.l1) + ", |v|_L2^2 = " + fmt(nv.l2sq));
      else
        add("A2", Verdict::fail, "weight norm is not finite");
    } catch (const Error& e) {
      add("A2", Verdict::fail, e.what());
    }
  }

  // Generator-based checks.
  std::optional<Probe> probe;
  if (in.generator != nullptr && in.generator->eval)
    probe = probe_generator(*in.generator, in.horizon, 10000, 10.0, in.seed);
  const double K = in.generator ? in.generator->lipschitz_k : 0.0;
  const double slack = 1.0 + 1e-6;

  // A3
  if (!probe) {
    add("A3", Verdict::not_checked, "generator not supplied");
  } else if (in.generator->growth != GrowthClass::lipschitz) {
    add("A3", Verdict::fail,
        "declared growth class " + to_string(in.generator->growth) + " is not globally Lipschitz");
  } else {
    const auto secant = sample_secant_slope(*in.generator, in.horizon, 10000, 10.0, in.seed);
    double baseline = 0.0;
    const int n = 1000;
    for (int k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 0.5 : 1.0;
      baseline += w * in.generator->baseline(in.horizon * k / n).norm();
    }
    baseline *= in.horizon / n;
    if (!std::isfinite(baseline))
      add("A3", Verdict::fail, "int |g(s,0,0)| ds is not finite");
    else if (secant.max_slope <= K * slack)
      add("A3", Verdict::pass,
          "max sampled secant slope " + fmt(secant.max_slope) + " <= K = " + fmt(K));
    else
      add("A3", Verdict::fail,
          "sampled secant slope " + fmt(secant.max_slope) + " exceeds K = " + fmt(K));
  }

  // A4 / B6
  std::optional<bool> terminal_ok;
  if (in.terminal_samples != nullptr) {
    terminal_ok = in.terminal_samples->allFinite();
    const double m2 = *terminal_ok ? in.terminal_samples->rowwise().squaredNorm().mean() : NAN;
    if (*terminal_ok) {
      add("A4", Verdict::pass, "terminal samples finite, E|xi|^2 ~ " + fmt(m2));
    } else {
      add("A4", Verdict::fail, "terminal samples contain non-finite values");
    }
  } else {
    add("A4", Verdict::not_checked, "terminal samples not supplied");
  }

  // A5
  if (in.barrier_samples == nullptr) {
    add("A5", Verdict::not_checked, "no barrier");
  } else if (in.terminal_samples == nullptr || in.terminal_samples->cols() != 1) {
    add("A5", Verdict::not_checked, "needs one-dimensional terminal samples");
  } else {
    const auto& S = *in.barrier_samples;
    const auto& xi = *in.terminal_samples;
    std::string failure;
    if (S.rows() != xi.rows()) failure = "barrier and terminal sample counts differ";
    if (failure.empty() && !S.allFinite()) failure = "barrier has non-finite values";
    if (failure.empty()) {
      const Index last = S.cols() - 1;
      for (Index p = 0; p < S.rows(); ++p) {
        if (S(p, last) > xi(p, 0)) {
          failure = "S_T <= xi violated on path " + std::to_string(p) + " (S_T = " +
                    fmt(S(p, last)) + ", xi = " + fmt(xi(p, 0)) + ")";
          break;
        }
      }
    }
    if (failure.empty()) {
      const double sup_pos = S.cwiseMax(0.0).rowwise().maxCoeff().squaredNorm() /
                             static_cast<double>(S.rows());
      add("A5", Verdict::pass, "S_T <= xi on every path, E[sup (S+)^2] ~ " + fmt(sup_pos));
    } else {
      add("A5", Verdict::fail, failure);
    }
  }

  // B1
  if (!probe) {
    add("B1", Verdict::not_checked, "generator not supplied");
  } else {
    std::string why;
    if (probe->z_cross > 1e-12) why = "g^i depends on rows of z other than z^i";
    else if (probe->y_secant > K * slack)
      why = "y-secant slope " + fmt(probe->y_secant) + " exceeds K = " + fmt(K);
    else if (probe->mixed > K * slack)
      why = "mixed difference ratio " + fmt(probe->mixed) + " exceeds K = " + fmt(K);
    if (why.empty())
      add("B1", Verdict::pass, "row structure, y-Lipschitz and mixed-difference bounds hold on samples");
    else
      add("B1", Verdict::fail, why);
  }

  add("B2", Verdict::not_checked,
      "Malliavin derivative bounds on xi are user-asserted and not differentiated here");

  // B3
  if (!probe) {
    add("B3", Verdict::not_checked, "generator not supplied");
  } else if (probe->y_secant > K * slack) {
    add("B3", Verdict::fail, "y-secant slope " + fmt(probe->y_secant) + " exceeds K = " + fmt(K));
  } else if (probe->growth_quad > 2.0 * K * slack) {
    add("B3", Verdict::fail,
        "|g| / (1 + |z|^2) reaches " + fmt(probe->growth_quad) + " > 2K = " + fmt(2 * K));
  } else {
    add("B3", Verdict::pass, "quadratic growth and y-Lipschitz bounds hold on samples (f/l split not verified)");
  }

  // B4
  if (in.terminal_samples == nullptr) {
    add("B4", Verdict::not_checked, "terminal samples not supplied");
  } else {
    const double sup = in.terminal_samples->rowwise().norm().maxCoeff();
    if (!in.terminal_bound)
      add("B4", Verdict::not_checked, "no bound declared; sampled max |xi| = " + fmt(sup));
    else if (std::isfinite(sup) && sup <= *in.terminal_bound)
      add("B4", Verdict::pass, "max |xi| = " + fmt(sup) + " <= " + fmt(*in.terminal_bound));
    else
      add("B4", Verdict::fail, "max |xi| = " + fmt(sup) + " exceeds " + fmt(*in.terminal_bound));
  }

  auto one_dim_check = [&](const char* id, double growth, const char* form) {
    if (!probe) {
      add(id, Verdict::not_checked, "generator not supplied");
    } else if (in.generator->m != 1 || in.generator->d != 1) {
      add(id, Verdict::fail, "requires m = d = 1");
    } else if (probe->min_y_increment < -1e-12) {
      add(id, Verdict::fail, "g is not increasing in y on samples");
    } else if (growth > K * slack) {
      add(id, Verdict::fail, std::string("|g| / ") + form + " reaches " + fmt(growth) +
                                 " > K = " + fmt(K));
    } else {
      add(id, Verdict::pass, std::string("increasing in y, |g| <= K ") + form + " on samples");
    }
  };

  one_dim_check("B5", probe ? probe->growth_lin : 0.0, "(1 + |z|)");

  if (!terminal_ok)
    add("B6", Verdict::not_checked, "terminal samples not supplied");
  else
    add("B6", *terminal_ok ? Verdict::pass : Verdict::fail,
        *terminal_ok ? "terminal samples finite" : "terminal samples contain non-finite values");

  one_dim_check("B7", probe ? probe->growth_quad : 0.0, "(1 + |z|^2)");
  return out;
}

}  // namespace tdbsde
