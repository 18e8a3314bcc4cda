#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sail {

/// Right-hand side y' = f(t, y); writes the derivative into dydt.
using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

/// Domain guard checked after every accepted step; returning false aborts the
/// integration with IntegrationError::Kind::domain.
using OdeGuard = std::function<bool(double t, std::span<const double> y)>;

/// Scalar event function g(t, y); roots along the solution are located on the
/// continuous interpolant.
using EventFn = std::function<double(double t, std::span<const double> y)>;

struct IntegTol {
  double rel = 1e-10;
  double abs = 1e-12;
};

class IntegrationError : public std::runtime_error {
 public:
  enum class Kind { step_underflow, max_steps, domain };

  IntegrationError(Kind kind, double t_fail, const std::string& what)
      : std::runtime_error(what), kind_(kind), t_fail_(t_fail) {}

  Kind kind() const { return kind_; }
  double t_fail() const { return t_fail_; }

 private:
  Kind kind_;
  double t_fail_;
};

/// Continuous solution of an initial-value problem, assembled from the
/// accepted steps of an embedded 5(4) Runge-Kutta pair with a fifth-order
/// interpolant on each step. Supports both integration directions.
class DenseSolution {
 public:
  std::size_t dim() const { return dim_; }
  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }

  /// Accepted-step mesh, endpoints included, ordered in integration direction.
  const std::vector<double>& times() const { return times_; }

  std::size_t n_steps() const { return steps_.size(); }

  /// Solution value at mesh node i.
  std::vector<double> node(std::size_t i) const;

  /// Evaluates the interpolant at t (must lie within the integration span).
  void sample(double t, std::span<double> y_out) const;
  std::vector<double> sample(double t) const;

 private:
  friend DenseSolution integrate(const OdeRhs&, std::span<const double>, double, double,
                                 const IntegTol&, const OdeGuard&);

  struct Step {
    double t0 = 0.0;
    double h = 0.0;
    // Five interpolation coefficient blocks of length dim each.
    std::vector<double> rcont;
  };

  std::size_t find_step(double t) const;

  std::vector<Step> steps_;
  std::vector<double> times_;  // steps_.size() + 1 nodes
  std::vector<double> y_final_;
  std::size_t dim_ = 0;
};

/// Integrates y' = f(t, y) from (t0, y0) to t1 (t1 < t0 integrates backward)
/// with adaptive step control and returns the dense solution. Throws
/// IntegrationError on step-size underflow, step-count exhaustion, or a guard
/// rejection.
DenseSolution integrate(const OdeRhs& f, std::span<const double> y0, double t0, double t1,
                        const IntegTol& tol = {}, const OdeGuard& guard = {});

struct EventHit {
  double t = 0.0;
  std::vector<double> y;
};

/// All roots of g along the solution, in integration order. Sign changes are
/// bracketed on a subsampled mesh of each step and refined on the dense
/// interpolant to |t| accuracy t_tol.
std::vector<EventHit> locate_events(const DenseSolution& sol, const EventFn& g,
                                    double t_tol = 1e-12);

/// Piecewise dense solution of a flow whose right-hand side is discontinuous
/// in time wherever state component `switch_index` crosses zero while
/// component `gate_index` is positive (a bang-bang rail flip). Produced by
/// integrate_switched, which restarts the integrator exactly at each flip so
/// every leg sees a right-hand side that is smooth along its own solution.
class SwitchedFlow {
 public:
  /// Clean legs in span order. legs()[i] is valid up to the i-th flip; the
  /// last leg runs to the end of the requested span.
  const std::vector<DenseSolution>& legs() const { return legs_; }

  /// Refined flip times, in span order (empty when the flow never flips).
  const std::vector<double>& switch_times() const { return switch_times_; }

  /// True when a detected flip could not be isolated (near-tangential
  /// crossing) and the remainder of the span was integrated straight through
  /// it; terminal accuracy is then limited to roughly 1e-8.
  bool degraded() const { return degraded_; }

  /// Interpolant lookup; queries inside the (micro-step wide) gap right at a
  /// flip are clamped onto the nearer end of the adjacent leg.
  void sample(double t, std::span<double> y_out) const;

  /// State at the end of the requested span.
  std::vector<double> terminal() const;

 private:
  friend SwitchedFlow integrate_switched(const OdeRhs&, std::span<const double>, double, double,
                                         std::size_t, std::size_t, const IntegTol&,
                                         const OdeGuard&);
  std::vector<DenseSolution> legs_;
  std::vector<double> cuts_;  // end of validity of each leg; back() == t1
  std::vector<double> switch_times_;
  bool degraded_ = false;
};

/// Integrates y' = f(t, y) across rail flips of the kind described on
/// SwitchedFlow. Forward spans only (t1 > t0). Each flip is located on a
/// scout integration, re-approached by a clean integration that stops just
/// short of it, refined by a scalar Newton step on the crossing component,
/// and stepped onto with a single micro-step; the next leg restarts there.
/// Correct refinement requires d(y[switch_index])/dt to be continuous across
/// the flip, i.e. the flipping quantity must not feed that component's rate
/// directly.
SwitchedFlow integrate_switched(const OdeRhs& f, std::span<const double> y0, double t0, double t1,
                                std::size_t switch_index, std::size_t gate_index,
                                const IntegTol& tol = {}, const OdeGuard& guard = {});

}  // namespace sail
