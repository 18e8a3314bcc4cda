#include "sail/ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace sail {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// Difference between the 5th- and 4th-order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output weights for the fifth coefficient block.
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

constexpr int kMaxSteps = 200000;

double error_norm(std::span<const double> y0, std::span<const double> y1,
                  std::span<const double> err, const IntegTol& tol) {
  double sum = 0.0;
  for (std::size_t i = 0; i < y0.size(); ++i) {
    const double sc = tol.abs + tol.rel * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double q = err[i] / sc;
    sum += q * q;
  }
  return std::sqrt(sum / static_cast<double>(y0.size()));
}

// Hairer-style starting step size estimate.
double initial_step(const OdeRhs& f, double t0, std::span<const double> y0,
                    std::span<const double> f0, double dir, double span, const IntegTol& tol) {
  const std::size_t n = y0.size();
  double d0 = 0.0, d1n = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = tol.abs + tol.rel * std::abs(y0[i]);
    d0 += (y0[i] / sc) * (y0[i] / sc);
    d1n += (f0[i] / sc) * (f0[i] / sc);
  }
  d0 = std::sqrt(d0 / n);
  d1n = std::sqrt(d1n / n);
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, span);

  std::vector<double> y1(n), f1(n);
  for (std::size_t i = 0; i < n; ++i) y1[i] = y0[i] + dir * h0 * f0[i];
  f(t0 + dir * h0, y1, f1);
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = tol.abs + tol.rel * std::abs(y0[i]);
    const double q = (f1[i] - f0[i]) / sc;
    d2 += q * q;
  }
  d2 = std::sqrt(d2 / n) / h0;

  const double dmax = std::max(d1n, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
  return std::min({100.0 * h0, h1, span});
}

}  // namespace

std::vector<double> DenseSolution::node(std::size_t i) const {
  if (i == steps_.size()) return y_final_;
  std::vector<double> y(dim_);
  const Step& s = steps_[i];
  // theta = 0 collapses the interpolant to its first coefficient block.
  std::copy_n(s.rcont.begin(), dim_, y.begin());
  return y;
}

std::size_t DenseSolution::find_step(double t) const {
  const bool fwd = times_.back() >= times_.front();
  // Last step whose start is not beyond t (in integration direction).
  std::size_t lo = 0, hi = steps_.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi + 1) / 2;
    const bool before = fwd ? times_[mid] <= t : times_[mid] >= t;
    if (before) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

void DenseSolution::sample(double t, std::span<double> y_out) const {
  const double lo = std::min(t_begin(), t_end());
  const double hi = std::max(t_begin(), t_end());
  // Tolerate round-off at the span edges.
  const double slack = 1e-12 * (1.0 + hi - lo);
  if (t < lo - slack || t > hi + slack) {
    throw std::out_of_range("DenseSolution::sample: t outside the integration span");
  }
  const Step& s = steps_[find_step(t)];
  const double theta = std::clamp((t - s.t0) / s.h, 0.0, 1.0);
  const double* r1 = s.rcont.data();
  const double* r2 = r1 + dim_;
  const double* r3 = r2 + dim_;
  const double* r4 = r3 + dim_;
  const double* r5 = r4 + dim_;
  const double th1 = 1.0 - theta;
  for (std::size_t i = 0; i < dim_; ++i) {
    y_out[i] = r1[i] + theta * (r2[i] + th1 * (r3[i] + theta * (r4[i] + th1 * r5[i])));
  }
}

std::vector<double> DenseSolution::sample(double t) const {
  std::vector<double> y(dim_);
  sample(t, y);
  return y;
}

DenseSolution integrate(const OdeRhs& f, std::span<const double> y0_in, double t0, double t1,
                        const IntegTol& tol, const OdeGuard& guard) {
  const std::size_t n = y0_in.size();
  if (n == 0) throw std::invalid_argument("integrate: empty state");
  if (t1 == t0) throw std::invalid_argument("integrate: empty integration span");
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);

  DenseSolution sol;
  sol.dim_ = n;
  sol.times_.push_back(t0);

  std::vector<double> y(y0_in.begin(), y0_in.end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  std::vector<double> ytmp(n), ynew(n), err(n);

  double t = t0;
  f(t, y, k1);
  double h = dir * initial_step(f, t0, y, k1, dir, span, tol);
  bool last_rejected = false;

  for (int step = 0; step < kMaxSteps; ++step) {
    // Clip the final step to the endpoint and remember that it is final:
    // `t + h` may round to one ulp short of t1, and retrying the leftover
    // sliver would underflow even though the span is effectively covered.
    const bool final_step = dir * (t + h - t1) >= 0.0;
    if (final_step) h = t1 - t;
    const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::abs(t);
    if (!final_step && std::abs(h) <= h_min) {
      throw IntegrationError(IntegrationError::Kind::step_underflow, t,
                             "integrate: step size underflow at t = " + std::to_string(t));
    }

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    f(t + c2 * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + c3 * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + c5 * h, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(t + h, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    f(t + h, ynew, k7);  // FSAL: becomes k1 of the next step when accepted

    for (std::size_t i = 0; i < n; ++i)
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double errn = error_norm(y, ynew, err, tol);

    if (errn <= 1.0) {
      DenseSolution::Step st;
      st.t0 = t;
      st.h = h;
      st.rcont.resize(5 * n);
      double* r1 = st.rcont.data();
      double* r2 = r1 + n;
      double* r3 = r2 + n;
      double* r4 = r3 + n;
      double* r5 = r4 + n;
      for (std::size_t i = 0; i < n; ++i) {
        const double ydiff = ynew[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        r1[i] = y[i];
        r2[i] = ydiff;
        r3[i] = bspl;
        r4[i] = ydiff - h * k7[i] - bspl;
        r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                     d7 * k7[i]);
      }
      sol.steps_.push_back(std::move(st));

      t = final_step ? t1 : t + h;
      y.swap(ynew);
      k1.swap(k7);
      sol.times_.push_back(t);

      if (guard && !guard(t, y)) {
        throw IntegrationError(IntegrationError::Kind::domain, t,
                               "integrate: domain guard rejected the state at t = " +
                                   std::to_string(t));
      }

      if (final_step) {
        sol.y_final_ = std::move(y);
        return sol;
      }

      double fac = 0.9 * std::pow(std::max(errn, 1e-16), -0.2);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
      h *= fac;
      last_rejected = false;
    } else {
      const double fac = std::max(0.2, 0.9 * std::pow(errn, -0.2));
      h *= fac;
      last_rejected = true;
    }
  }
  throw IntegrationError(IntegrationError::Kind::max_steps, t,
                         "integrate: exceeded the step budget at t = " + std::to_string(t));
}

std::vector<EventHit> locate_events(const DenseSolution& sol, const EventFn& g, double t_tol) {
  std::vector<EventHit> hits;
  const std::size_t n = sol.dim();
  std::vector<double> ya(n), yb(n), ym(n);

  const auto eval = [&](double t, std::vector<double>& buf) {
    sol.sample(t, buf);
    return g(t, buf);
  };

  // Refines one bracket [ta, tb] with ga * gb < 0 using the Illinois variant
  // of regula falsi, falling back to bisection when the secant stalls.
  const auto refine = [&](double ta, double tb, double ga, double gb) {
    int side = 0;
    for (int it = 0; it < 200 && std::abs(tb - ta) > t_tol; ++it) {
      double tm = (ga * tb - gb * ta) / (ga - gb);
      const double lo = std::min(ta, tb), hi = std::max(ta, tb);
      if (!(tm > lo && tm < hi)) tm = 0.5 * (ta + tb);
      const double gm = eval(tm, ym);
      if (gm == 0.0) {
        ta = tb = tm;
        break;
      }
      if ((gm > 0.0) == (ga > 0.0)) {
        ta = tm;
        ga = gm;
        if (side == -1) gb *= 0.5;
        side = -1;
      } else {
        tb = tm;
        gb = gm;
        if (side == 1) ga *= 0.5;
        side = 1;
      }
    }
    const double troot = 0.5 * (ta + tb);
    EventHit hit;
    hit.t = troot;
    hit.y = sol.sample(troot);
    hits.push_back(std::move(hit));
  };

  const auto& mesh = sol.times();
  constexpr int kSub = 8;  // subsamples per accepted step to separate close roots
  double t_prev = mesh.front();
  double g_prev = eval(t_prev, ya);
  if (g_prev == 0.0) hits.push_back({t_prev, sol.node(0)});

  for (std::size_t s = 0; s + 1 < mesh.size(); ++s) {
    const double a = mesh[s], b = mesh[s + 1];
    for (int j = 1; j <= kSub; ++j) {
      const double tc = j == kSub ? b : a + (b - a) * j / kSub;
      const double gc = eval(tc, yb);
      if (gc == 0.0) {
        hits.push_back({tc, yb});
      } else if (g_prev != 0.0 && (gc > 0.0) != (g_prev > 0.0)) {
        refine(t_prev, tc, g_prev, gc);
      }
      t_prev = tc;
      g_prev = gc;
    }
  }
  return hits;
}

void SwitchedFlow::sample(double t, std::span<double> y_out) const {
  std::size_t i = 0;
  while (i + 1 < cuts_.size() && t > cuts_[i]) ++i;
  const DenseSolution& leg = legs_[i];
  leg.sample(std::clamp(t, leg.t_begin(), leg.t_end()), y_out);
}

std::vector<double> SwitchedFlow::terminal() const {
  const DenseSolution& last = legs_.back();
  return last.node(last.n_steps());
}

namespace {

// Classical fourth-order step used to advance the last micro-interval onto a
// located flip; spans of ~1e-6 make its truncation error irrelevant.
void rk4_step(const OdeRhs& f, double t, std::vector<double>& y, double h) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  f(t, y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  f(t + 0.5 * h, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  f(t + 0.5 * h, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  f(t + h, tmp, k4);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
}

}  // namespace

SwitchedFlow integrate_switched(const OdeRhs& f, std::span<const double> y0, double t0, double t1,
                                std::size_t switch_index, std::size_t gate_index,
                                const IntegTol& tol, const OdeGuard& guard) {
  if (!(t1 > t0)) {
    throw std::invalid_argument("integrate_switched: span must be forward (t1 > t0)");
  }
  if (switch_index >= y0.size() || gate_index >= y0.size()) {
    throw std::invalid_argument("integrate_switched: component index out of range");
  }
  constexpr int kMaxLegs = 8;
  constexpr double kStandoff = 1e-6;  // clean-leg endpoint short of the flip
  constexpr double kEdge = 1e-10;     // keep the micro-step on the near side
  const EventFn surface = [switch_index](double, std::span<const double> y) {
    return y[switch_index];
  };

  SwitchedFlow flow;
  double t = t0;
  std::vector<double> y(y0.begin(), y0.end());
  std::vector<double> dydt(y0.size());
  for (int leg = 0; leg + 1 < kMaxLegs; ++leg) {
    DenseSolution scout = integrate(f, y, t, t1, tol, guard);
    // First gated crossing strictly inside the leg; crossings within the skip
    // margin of the leg start are ghosts of the flip just handled.
    const double margin = std::max(2.0 * kStandoff, 1e-9 * (t1 - t0));
    double te0 = t1;
    for (const EventHit& hit : locate_events(scout, surface)) {
      if (hit.t <= t + margin || hit.t >= t1 - margin) continue;
      if (hit.y[gate_index] > 0.0) {
        te0 = hit.t;
        break;
      }
    }
    if (te0 >= t1) {
      flow.legs_.push_back(std::move(scout));
      flow.cuts_.push_back(t1);
      return flow;
    }
    // Clean leg ending strictly before the flip. The scout's located time is
    // polluted by the straddling step, so approach in two tries: if the
    // standoff point already sits on the far side (the crossing component no
    // longer moves toward zero), back off by another decade.
    double t_pre = te0 - kStandoff;
    DenseSolution clean = integrate(f, y, t, t_pre, tol, guard);
    std::vector<double> yc = clean.node(clean.n_steps());
    f(t_pre, yc, dydt);
    if (yc[switch_index] * dydt[switch_index] >= 0.0) {
      t_pre = te0 - 10.0 * kStandoff;
      clean = integrate(f, y, t, t_pre, tol, guard);
      yc = clean.node(clean.n_steps());
      f(t_pre, yc, dydt);
      if (yc[switch_index] * dydt[switch_index] >= 0.0) {
        // Near-tangential flip: integrate straight through the remainder.
        flow.legs_.push_back(std::move(scout));
        flow.cuts_.push_back(t1);
        flow.degraded_ = true;
        return flow;
      }
    }
    // Scalar Newton for the crossing time. Validity of the slope on both
    // sides of the flip is a documented requirement on the system.
    const double dt = -yc[switch_index] / dydt[switch_index] - kEdge;
    if (dt > 0.0) rk4_step(f, t_pre, yc, dt);
    flow.legs_.push_back(std::move(clean));
    flow.cuts_.push_back(t_pre);
    flow.switch_times_.push_back(t_pre + std::max(dt, 0.0) + kEdge);
    y = yc;
    t = t_pre + std::max(dt, 0.0);
  }
  flow.legs_.push_back(integrate(f, y, t, t1, tol, guard));
  flow.cuts_.push_back(t1);
  return flow;
}

}  // namespace sail
