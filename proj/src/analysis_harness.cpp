#include "rdtf/analysis_harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdtf/errors.hpp"
#include "rdtf/initial_data.hpp"
#include "rdtf/parallel.hpp"
#include "rdtf/small_matrix.hpp"

namespace rdtf {

namespace {

void require_sigma(double sigma, bool open) {
  const bool ok = open ? (sigma > 0.0 && sigma < 0.25) : (sigma >= 0.0 && sigma <= 0.25);
  if (!ok) throw PreconditionError("sigma out of range");
}

double weighted_integral(const ScalarField& f, const ScalarField& weight, const BackgroundMetric& bg) {
  require_same_grid(f.grid(), weight.grid(), "weighted integral");
  ScalarField w(f.grid());
  for (std::size_t p = 0; p < f.size(); ++p) w[p] = f[p] * weight[p];
  return integrate(w, bg.sqrt_det);
}

std::string grid_label(const TorusGrid& grid) {
  std::ostringstream s;
  s << "n=" << grid.dim() << " N=" << grid.res() << " L=" << grid.period();
  return s.str();
}

void tag(NormReport& rep, const FlowTrajectory& traj) {
  rep.metadata["grid"] = grid_label(traj.grid());
  if (!traj.dt_schedule.empty()) {
    const auto [lo, hi] = std::minmax_element(traj.dt_schedule.begin(), traj.dt_schedule.end());
    std::ostringstream s;
    s << "steps=" << traj.dt_schedule.size() << " min=" << *lo << " max=" << *hi;
    rep.metadata["dt"] = s.str();
  }
}

/// Snapshot indices inside [t_lo, T].
std::vector<std::size_t> window(const FlowTrajectory& traj, double t_lo) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < traj.states.size(); ++k)
    if (traj.states[k].t >= t_lo * (1.0 - 1e-12)) idx.push_back(k);
  return idx;
}

double window_start(const FlowTrajectory& traj, const VerifyOptions& opts) {
  return opts.t_lo >= 0.0 ? opts.t_lo : resolved_window_start(traj.grid());
}

bool nondecreasing(const std::vector<double>& v) {
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] < v[k - 1] - 1e-12 * scale) return false;
  return true;
}

/// Trapezoid accumulation of per-snapshot integrands.
Series accumulate(const FlowTrajectory& traj, const std::function<double(const MetricField&)>& integrand) {
  Series s;
  double acc = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const double v = integrand(traj.states[k].g);
    if (k > 0) acc += 0.5 * (traj.states[k].t - traj.states[k - 1].t) * (v + prev);
    s.push(traj.states[k].t, acc);
    prev = v;
  }
  return s;
}

ScalarField powered(const ScalarField& f, double e) {
  ScalarField out(f.grid());
  for (std::size_t p = 0; p < f.size(); ++p) out[p] = f[p] > 0.0 ? std::pow(f[p], e) : 0.0;
  return out;
}

double step_of(double x) { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }
double step_d1(double x) { return 30.0 * x * x * (1.0 - x) * (1.0 - x); }
double step_d2(double x) { return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x); }

}  // namespace

double torus_distance(const TorusGrid& grid, const Point& a, const Point& b) {
  const double L = grid.period();
  double s = 0.0;
  for (int i = 0; i < grid.dim(); ++i) {
    double d = std::fmod(std::abs(a[i] - b[i]), L);
    d = std::min(d, L - d);
    s += d * d;
  }
  return std::sqrt(s);
}

ScalarField ball_indicator(const TorusGrid& grid, const Point& center, double radius) {
  if (!(radius > 0.0) || radius >= 0.5 * grid.period())
    throw PreconditionError("ball radius must lie in (0, L/2)");
  ScalarField w(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) w[p] = torus_distance(grid, grid.position(p), center) <= radius ? 1.0 : 0.0;
  return w;
}

CutoffFunction build_cutoff(const Point& center, double r, double outer, const TorusGrid& grid, int power) {
  if (!(r > 0.0 && r < outer && outer < 0.5 * grid.period()))
    throw PreconditionError("cutoff radii must satisfy 0 < r < outer < L/2");
  if (power < 3) throw PreconditionError("cutoff power must be at least 3");
  CutoffFunction c;
  c.center = center;
  c.r = r;
  c.outer = outer;
  c.power = power;
  c.eta = ScalarField(grid);
  const double rho = 0.5 * (r + outer);
  const double w = rho - r;
  const int n = grid.dim();
  const double m = power;
  double bound = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double d = torus_distance(grid, grid.position(p), center);
    if (d <= r) {
      c.eta[p] = 1.0;
      continue;
    }
    if (d >= rho) continue;
    const double x = (rho - d) / w;
    const double s = step_of(x);
    const double sd = -step_d1(x) / w;
    const double sdd = step_d2(x) / (w * w);
    const double eta = std::pow(s, m);
    c.eta[p] = eta;
    if (eta <= 1e-8) continue;
    const double e1 = m * std::pow(s, m - 1.0) * sd;
    const double e2 = m * (m - 1.0) * std::pow(s, m - 2.0) * sd * sd + m * std::pow(s, m - 1.0) * sdd;
    // Hess eta = e2 n n^T + e1 (I - n n^T) / d
    const double g2 = e1 * e1;
    const double h2 = e2 * e2 + g2 * (n - 1) / (d * d);
    bound = std::max(bound, g2 / eta + g2 * g2 / (eta * eta * eta) + h2 / eta);
  }
  c.ratio_bound = bound;
  return c;
}

double resolved_window_start(const TorusGrid& grid) { return 10.0 * grid.spacing() * grid.spacing(); }

double v_exponent(double sigma) { return sigma / (2.0 + sigma); }

double p_exponent(double sigma) {
  if (!(sigma > 0.0)) throw PreconditionError("p(sigma) needs sigma > 0");
  return (2.0 + sigma) / sigma;
}

PowerFit fit_power_law(const Series& s, double t_lo, double t_hi) {
  std::vector<double> x, y;
  for (std::size_t k = 0; k < s.t.size(); ++k)
    if (s.t[k] >= t_lo && s.t[k] <= t_hi && s.t[k] > 0.0 && s.value[k] > 0.0) {
      x.push_back(std::log(s.t[k]));
      y.push_back(std::log(s.value[k]));
    }
  if (x.size() < 2) throw PreconditionError("power-law fit needs at least two positive points");
  const double m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k] / m;
    my += y[k] / m;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (!(sxx > 0.0)) throw PreconditionError("power-law fit needs distinct times");
  PowerFit f;
  f.exponent = sxy / sxx;
  const double logc = my - f.exponent * mx;
  f.constant = std::exp(logc);
  double res = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = y[k] - logc - f.exponent * x[k];
    res += e * e;
  }
  f.residual = std::sqrt(res / m);
  f.points = static_cast<int>(x.size());
  return f;
}

double series_at(const Series& s, double t) {
  if (s.t.empty()) throw PreconditionError("series_at: empty series");
  if (t <= s.t.front()) return s.value.front();
  if (t >= s.t.back()) return s.value.back();
  const auto it = std::lower_bound(s.t.begin(), s.t.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - s.t.begin());
  if (s.t[k] == t) return s.value[k];
  const double w = (t - s.t[k - 1]) / (s.t[k] - s.t[k - 1]);
  return (1.0 - w) * s.value[k - 1] + w * s.value[k];
}

double local_l2_distance(const MetricField& g_t, const MetricField& g_0, const BackgroundMetric& bg,
                         const ScalarField& weight) {
  return local_lp_distance(g_t, g_0, bg, weight, 2.0);
}

double local_lp_distance(const MetricField& g_t, const MetricField& g_0, const BackgroundMetric& bg,
                         const ScalarField& weight, double p) {
  ScalarField d = difference_norm(g_t, g_0, bg);
  for (double& v : d.values()) v = std::pow(v, p);
  return weighted_integral(d, weight, bg);
}

double sobolev_energy(const MetricField& g, const BackgroundMetric& bg, const ScalarField& weight, double sigma) {
  require_sigma(sigma, false);
  const ScalarField gs = grad_norm_sq(metric_jet(g, bg, false), bg);
  return weighted_integral(powered(gs, 1.0 + sigma), weight, bg);
}

double sobolev_dissipation(const MetricField& g, const BackgroundMetric& bg, const ScalarField& weight,
                           double sigma) {
  require_sigma(sigma, false);
  const MetricJet jet = metric_jet(g, bg, true);
  const ScalarField gs = grad_norm_sq(jet, bg);
  const ScalarField hs = hess_norm_sq(jet, bg);
  ScalarField f(g.grid());
  for (std::size_t p = 0; p < f.size(); ++p)
    f[p] = std::pow(gs[p], 2.0 + sigma) + (sigma == 0.0 ? 1.0 : std::pow(gs[p], sigma)) * hs[p];
  return weighted_integral(f, weight, bg);
}

Series dirichlet_energy_accum(const FlowTrajectory& traj, const ScalarField& weight) {
  return accumulate(traj, [&](const MetricField& g) { return sobolev_energy(g, traj.bg, weight, 0.0); });
}

EnergyAccumulator::EnergyAccumulator(const BackgroundMetric& bg, std::vector<ScalarField> regions,
                                     std::vector<double> sigmas)
    : bg_(&bg), regions_(std::move(regions)), sigmas_(std::move(sigmas)) {
  for (double s : sigmas_) require_sigma(s, false);
  for (const auto& r : regions_) require_same_grid(r.grid(), bg.grid(), "EnergyAccumulator");
  dirichlet_.resize(regions_.size());
  dissipation_.resize(regions_.size() * sigmas_.size());
}

void EnergyAccumulator::observe(const FlowState& state) {
  const MetricJet jet = metric_jet(state.g, *bg_, !sigmas_.empty());
  const ScalarField gs = grad_norm_sq(jet, *bg_);
  std::vector<ScalarField> diss;
  if (!sigmas_.empty()) {
    const ScalarField hs = hess_norm_sq(jet, *bg_);
    for (double s : sigmas_) {
      ScalarField f(gs.grid());
      for (std::size_t p = 0; p < f.size(); ++p)
        f[p] = std::pow(gs[p], 2.0 + s) + (s == 0.0 ? 1.0 : std::pow(gs[p], s)) * hs[p];
      diss.push_back(std::move(f));
    }
  }
  std::vector<double> now;
  for (const auto& w : regions_) {
    now.push_back(weighted_integral(gs, w, *bg_));
    for (const auto& f : diss) now.push_back(weighted_integral(f, w, *bg_));
  }
  const std::size_t per = 1 + sigmas_.size();
  for (std::size_t r = 0; r < regions_.size(); ++r) {
    auto advance = [&](Series& s, std::size_t slot) {
      const double prev = s.value.empty() ? 0.0 : s.value.back();
      const double inc = started_ ? 0.5 * (state.t - last_t_) * (now[slot] + last_[slot]) : 0.0;
      s.push(state.t, prev + inc);
    };
    advance(dirichlet_[r], r * per);
    for (std::size_t k = 0; k < sigmas_.size(); ++k) advance(dissipation_[r * sigmas_.size() + k], r * per + 1 + k);
  }
  last_ = std::move(now);
  last_t_ = state.t;
  started_ = true;
}

std::function<void(const FlowState&)> EnergyAccumulator::observer() {
  return [this](const FlowState& s) { observe(s); };
}

NormReport verify_l2_rate(const FlowTrajectory& traj, const MetricField& g_0, const ScalarField& inner,
                          const ScalarField& outer, const Series* accumulated, const VerifyOptions& opts) {
  const BackgroundMetric& bg = traj.bg;
  const double t_lo = window_start(traj, opts);
  const auto idx = window(traj, t_lo);
  if (idx.size() < 4) throw PreconditionError("verify_l2_rate: fewer than 4 resolved snapshots");
  const Series acc = accumulated ? *accumulated : dirichlet_energy_accum(traj, inner);

  NormReport rep;
  rep.name = "l2_rate";
  tag(rep, traj);
  Series& lhs = rep.series["LHS"];
  Series& l2 = rep.series["l2_distance"];
  Series& dir = rep.series["dirichlet_accum"];
  for (std::size_t k : idx) {
    const double t = traj.states[k].t;
    const double a = local_l2_distance(traj.states[k].g, g_0, bg, inner);
    const double b = series_at(acc, t);
    l2.push(t, a);
    dir.push(t, b);
    lhs.push(t, a + b);
  }
  const double e0 = sobolev_energy(g_0, bg, outer, 0.0);
  int positive = 0;
  for (double v : lhs.value) positive += v > 0.0;
  if (positive < 2) {
    // g stays at g_0: nothing to fit, the bound holds trivially
    rep.metadata["LHS"] = "identically zero";
    rep.values["t_lo"] = t_lo;
    rep.values["initial_dirichlet_outer"] = e0;
    rep.values["LHS_t_lo"] = lhs.value.front();
    rep.verdicts["rate"] = true;
    rep.verdicts["attainment"] = true;
    return rep;
  }
  const PowerFit fit = fit_power_law(lhs, t_lo);
  rep.fits["LHS"] = fit;
  rep.values["t_lo"] = t_lo;
  rep.values["q"] = fit.exponent;
  rep.values["C"] = fit.constant;
  rep.values["initial_dirichlet_outer"] = e0;
  rep.values["C_normalized"] = fit.constant / (1.0 + e0);
  rep.values["LHS_t_lo"] = lhs.value.front();
  rep.verdicts["rate"] = fit.exponent >= opts.min_rate;
  rep.verdicts["attainment"] = lhs.value.front() <= opts.attainment * fit.constant;
  return rep;
}

NormReport verify_sobolev_estimate(const FlowTrajectory& traj, const MetricField& g_0, double sigma,
                                   const ScalarField& inner, const ScalarField& outer, const Series* accumulated,
                                   const VerifyOptions& opts) {
  require_sigma(sigma, false);
  const BackgroundMetric& bg = traj.bg;
  const double t_lo = window_start(traj, opts);
  const auto idx = window(traj, t_lo);
  if (idx.size() < 2) throw PreconditionError("verify_sobolev_estimate: fewer than 2 resolved snapshots");
  const Series acc = accumulated
                         ? *accumulated
                         : accumulate(traj, [&](const MetricField& g) { return sobolev_dissipation(g, bg, inner, sigma); });

  NormReport rep;
  rep.name = "sobolev_estimate";
  tag(rep, traj);
  Series& lhs = rep.series["LHS"];
  for (std::size_t k : idx) {
    const double t = traj.states[k].t;
    lhs.push(t, sobolev_energy(traj.states[k].g, bg, inner, sigma) + series_at(acc, t));
  }
  const double I1 = sobolev_energy(g_0, bg, outer, sigma);
  const double I2 = 1.0 + sobolev_energy(g_0, bg, outer, 0.0);

  // least squares LHS = a + s t
  const double m = static_cast<double>(lhs.t.size());
  double mt = 0.0, my = 0.0;
  for (std::size_t k = 0; k < lhs.t.size(); ++k) {
    mt += lhs.t[k] / m;
    my += lhs.value[k] / m;
  }
  double stt = 0.0, sty = 0.0;
  for (std::size_t k = 0; k < lhs.t.size(); ++k) {
    stt += (lhs.t[k] - mt) * (lhs.t[k] - mt);
    sty += (lhs.t[k] - mt) * (lhs.value[k] - my);
  }
  const double slope = stt > 0.0 ? sty / stt : 0.0;
  const double a = my - slope * mt;

  // secant slopes from the window start; superlinear growth makes the late ones steeper
  const double t0 = lhs.t.front(), l0 = lhs.value.front();
  const double t_mid = 0.5 * (t0 + lhs.t.back());
  double early = 0.0, late = -1e300, top = 0.0, scale = 0.0;
  Series& excess = rep.series["excess"];
  excess.push(t0, 0.0);
  for (std::size_t k = 1; k < lhs.t.size(); ++k) {
    const double sec = (lhs.value[k] - l0) / (lhs.t[k] - t0);
    if (lhs.t[k] <= t_mid)
      early = std::max(early, sec);
    else
      late = std::max(late, sec);
    top = std::max(top, sec);
    excess.push(lhs.t[k], lhs.value[k] - l0);
  }
  for (double v : lhs.value) scale = std::max(scale, std::abs(v));
  const double span = lhs.t.back() - t0;
  const bool linear = late <= early + (span > 0.0 ? 0.05 * scale / span : 0.0);
  rep.values["sigma"] = sigma;
  rep.values["t_lo"] = t_lo;
  rep.values["I1"] = I1;
  rep.values["I2"] = I2;
  rep.values["intercept"] = a;
  rep.values["slope"] = slope;
  rep.values["early_growth"] = early;
  rep.values["late_growth"] = std::max(late, 0.0);
  rep.values["A"] = I1 > 0.0 ? l0 / I1 : 0.0;
  rep.values["B"] = top / I2;
  rep.verdicts["at_most_linear"] = linear;
  return rep;
}

NormReport verify_w12sigma_convergence(const FlowTrajectory& traj, const MetricField& g_0, double sigma,
                                       const ScalarField& inner, const ScalarField& outer,
                                       const std::vector<double>& p_list, const VerifyOptions& opts) {
  require_sigma(sigma, true);
  const BackgroundMetric& bg = traj.bg;
  const double t_lo = window_start(traj, opts);
  const auto idx = window(traj, t_lo);
  if (idx.size() < 2) throw PreconditionError("verify_w12sigma_convergence: fewer than 2 resolved snapshots");
  for (double p : p_list)
    if (!(p >= 2.0)) throw PreconditionError("L^p exponents must be at least 2");

  NormReport rep;
  rep.name = "w12sigma_convergence";
  tag(rep, traj);
  Series& gd = rep.series["grad_diff"];
  Series& ex = rep.series["dirichlet_excess"];
  const double e0 = sobolev_energy(g_0, bg, outer, 0.0);
  for (std::size_t k : idx) {
    const double t = traj.states[k].t;
    MetricField d = traj.states[k].g;
    for (std::size_t i = 0; i < d.values().size(); ++i) d.values()[i] -= g_0.values()[i];
    const ScalarField gs = grad_norm_sq(metric_jet(d, bg, false), bg);
    gd.push(t, weighted_integral(powered(gs, 0.5 * (2.0 + sigma)), inner, bg));
    for (double p : p_list) {
      std::ostringstream key;
      key << "lp_" << p;
      rep.series[key.str()].push(t, local_lp_distance(traj.states[k].g, g_0, bg, inner, p));
    }
    ex.push(t, sobolev_energy(traj.states[k].g, bg, inner, 0.0) - e0);
  }
  rep.values["sigma"] = sigma;
  rep.values["v_sigma"] = v_exponent(sigma);
  rep.values["p_sigma"] = p_exponent(sigma);
  rep.values["t_lo"] = t_lo;
  const double last = gd.value.back();
  rep.values["grad_diff_fraction"] = last > 0.0 ? gd.value.front() / last : 0.0;
  rep.verdicts["grad_diff_to_zero"] = nondecreasing(gd.value) && gd.value.front() <= opts.decay_fraction * last;
  for (double p : p_list) {
    std::ostringstream key;
    key << "lp_" << p;
    const Series& s = rep.series[key.str()];
    rep.values[key.str() + "_fraction"] = s.value.back() > 0.0 ? s.value.front() / s.value.back() : 0.0;
    rep.verdicts[key.str() + "_to_zero"] = nondecreasing(s.value);
  }
  int positive = 0;
  for (double v : ex.value) positive += v > 0.0;
  rep.metadata["dirichlet_excess"] = positive == 0 ? "nonpositive" : "positive";
  if (positive >= 2) {
    const PowerFit f = fit_power_law(ex, t_lo);
    rep.fits["dirichlet_excess"] = f;
    rep.values["excess_exponent"] = f.exponent;
  }
  return rep;
}

NormReport interpolation_inequality_check(const ScalarField& f, const MetricField& g) {
  require_same_grid(f.grid(), g.grid(), "interpolation_inequality_check");
  if (!(f.min() > 0.0)) throw PreconditionError("interpolation check needs f > 0");
  require_spd(g);
  const TorusGrid& grid = f.grid();
  const int n = grid.dim();
  const int P = g.packed();
  std::vector<ScalarField> df(n), ddf(n * n);
  for (int a = 0; a < n; ++a) df[a] = spectral_derivative(f, a);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) ddf[a * n + b] = ddf[b * n + a] = spectral_derivative(df[a], b);
  // dg[c * n + a] = d_a g_c (packed component c)
  std::vector<ScalarField> dg(P * n);
  for (int c = 0; c < P; ++c) {
    ScalarField comp(grid);
    for (std::size_t p = 0; p < grid.size(); ++p) comp[p] = g.node(p)[c];
    for (int a = 0; a < n; ++a) dg[c * n + a] = spectral_derivative(comp, a);
  }

  ScalarField lhs(grid), rhs(grid), quartic(grid), ibp(grid), vol(grid);
  dispatch_dim(n, [&](auto dd) {
    constexpr int D = decltype(dd)::value;
    parallel_for(grid.size(), [&](std::size_t p) {
      const Mat<D> gm = unpack<D>(g.node(p));
      const Mat<D> gi = inverse<D>(gm);
      auto dG = [&](int a, int i, int j) { return dg[packed_index(D, i, j) * D + a][p]; };
      double H[D * D];
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) {
          double h = ddf[i * D + j][p];
          for (int k = 0; k < D; ++k) {
            double gam = 0.0;
            for (int l = 0; l < D; ++l) gam += 0.5 * gi[k * D + l] * (dG(i, j, l) + dG(j, i, l) - dG(l, i, j));
            h -= gam * df[k][p];
          }
          H[i * D + j] = h;
        }
      double up[D];  // g^{ij} d_j f
      for (int i = 0; i < D; ++i) {
        up[i] = 0.0;
        for (int j = 0; j < D; ++j) up[i] += gi[i * D + j] * df[j][p];
      }
      double grad2 = 0.0, lap = 0.0, hess2 = 0.0, hvv = 0.0;
      for (int i = 0; i < D; ++i) grad2 += up[i] * df[i][p];
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) {
          lap += gi[i * D + j] * H[i * D + j];
          hvv += H[i * D + j] * up[i] * up[j];
          for (int k = 0; k < D; ++k)
            for (int l = 0; l < D; ++l) hess2 += gi[i * D + k] * gi[j * D + l] * H[i * D + j] * H[k * D + l];
        }
      const double fv = f[p];
      lhs[p] = grad2 * grad2 / (fv * fv);
      rhs[p] = hess2;
      // u = sqrt f: |du|^2 = |df|^2 / 4f, Hess f(du, du) = Hess f(df, df) / 4f
      const double du2 = grad2 / (4.0 * fv);
      quartic[p] = du2 * du2;
      ibp[p] = 0.25 * lap * du2 + 0.5 * hvv / (4.0 * fv);
      vol[p] = std::sqrt(determinant<D>(gm));
    });
  });
  NormReport rep;
  rep.name = "interpolation_inequality";
  rep.metadata["grid"] = grid_label(grid);
  const double L = integrate(lhs, vol), R = integrate(rhs, vol);
  const double I = integrate(quartic, vol), J = integrate(ibp, vol);
  rep.values["lhs"] = L;
  rep.values["rhs"] = R;
  rep.values["ratio"] = R > 0.0 ? L / R : 0.0;
  rep.values["identity_lhs"] = I;
  rep.values["identity_rhs"] = J;
  rep.values["identity_residual"] = I > 0.0 ? std::abs(I - J) / I : std::abs(J);
  return rep;
}

}  // namespace rdtf
