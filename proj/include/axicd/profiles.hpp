#pragma once

// Entrance data per phase: radial velocity v (u . (-e_r) = v), swirl w
// (u . e_theta = w) and entropy S, sampled uniformly over the phase's part
// of the entrance and interpolated with cubic B-splines.

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "axicd/eos.hpp"
#include "axicd/errors.hpp"

namespace axicd {

class RadialProfile {
 public:
  RadialProfile() = default;

  RadialProfile(double r_min, double r_max, std::vector<double> samples)
      : r_min_(r_min), r_max_(r_max), samples_(std::move(samples)) {
    if (samples_.size() < 5) fail(ErrorKind::ConfigError, "profile needs at least 5 samples");
    h_ = (r_max_ - r_min_) / static_cast<double>(samples_.size() - 1);
    constant_ = std::all_of(samples_.begin(), samples_.end(),
                            [&](double v) { return v == samples_.front(); });
    spline_ = boost::math::interpolators::cardinal_cubic_b_spline<double>(
        samples_.data(), samples_.size(), r_min_, h_);
    cumulative_.assign(samples_.size(), 0.0);
    for (std::size_t k = 1; k < samples_.size(); ++k) {
      cumulative_[k] = cumulative_[k - 1] + piece_integral(r_min_ + (k - 1) * h_, r_min_ + k * h_);
    }
  }

  static RadialProfile sample(double r_min, double r_max, int count,
                              const std::function<double(double)>& fn) {
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
      const double r = k == count - 1 ? r_max : r_min + k * (r_max - r_min) / (count - 1);
      v[k] = fn(r);
    }
    return RadialProfile(r_min, r_max, std::move(v));
  }

  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }
  double step() const { return h_; }
  const std::vector<double>& samples() const { return samples_; }
  double radius(std::size_t k) const {
    return k + 1 == samples_.size() ? r_max_ : r_min_ + static_cast<double>(k) * h_;
  }

  // Constant data bypass the spline so the background stays exact.
  double operator()(double r) const { return constant_ ? samples_.front() : spline_(clamp(r)); }
  double prime(double r) const { return constant_ ? 0.0 : spline_.prime(clamp(r)); }
  double double_prime(double r) const { return constant_ ? 0.0 : spline_.double_prime(clamp(r)); }

  //! Integral of the interpolant from r_min to r (exact for the cubic pieces).
  double integral_to(double r) const {
    r = clamp(r);
    if (constant_) return samples_.front() * (r - r_min_);
    const auto k = std::min(static_cast<std::size_t>((r - r_min_) / h_), samples_.size() - 2);
    return cumulative_[k] + piece_integral(r_min_ + k * h_, r);
  }

  //! sum over m <= order of max |d^m / dr^m (profile - offset)| at the samples.
  double c_norm(int order, double offset = 0.0) const {
    double n0 = 0.0, n1 = 0.0, n2 = 0.0;
    for (std::size_t k = 0; k < samples_.size(); ++k) {
      const double r = radius(k);
      n0 = std::max(n0, std::abs(samples_[k] - offset));
      if (order >= 1) n1 = std::max(n1, std::abs(prime(r)));
      if (order >= 2) n2 = std::max(n2, std::abs(double_prime(r)));
    }
    return n0 + n1 + n2;
  }

 private:
  double clamp(double r) const { return std::clamp(r, r_min_, r_max_); }
  double piece_integral(double a, double b) const {
    return boost::math::quadrature::gauss<double, 3>::integrate(
        [this](double t) { return spline_(t); }, a, b);
  }

  double r_min_ = 0.0;
  double r_max_ = 1.0;
  double h_ = 1.0;
  bool constant_ = true;
  std::vector<double> samples_;
  std::vector<double> cumulative_;
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
};

struct PhaseEntrance {
  RadialProfile v;  // u . (-e_r)
  RadialProfile w;  // u . e_theta
  RadialProfile S;
};

//! Smooth compactly supported bump (1 - ((r - c)/hw)^2)^4.
inline double mollifier_bump(double r, double center, double half_width) {
  const double t = (r - center) / half_width;
  if (std::abs(t) >= 1.0) return 0.0;
  const double q = 1.0 - t * t;
  return q * q * q * q;
}

//! Relative amplitudes of the six preset bumps. Entropy bumps are relative to S0.
struct BumpAmplitudes {
  double S_plus = 0.0, w_plus = 0.0, v_plus = 0.0;
  double S_minus = 0.0, w_minus = 0.0, v_minus = 0.0;

  bool operator==(const BumpAmplitudes&) const = default;
  BumpAmplitudes scaled(double k) const {
    return {k * S_plus, k * w_plus, k * v_plus, k * S_minus, k * w_minus, k * v_minus};
  }
};

class EntranceProfiles {
 public:
  static constexpr int kDefaultSamples = 1025;

  EntranceProfiles() = default;
  EntranceProfiles(PhaseEntrance plus, PhaseEntrance minus)
      : plus_(std::move(plus)), minus_(std::move(minus)) {}

  //! Unperturbed entrance: v = w = 0, S = S0.
  static EntranceProfiles background(const FlowConstants& c, int samples = kDefaultSamples) {
    return bumps(c, BumpAmplitudes{}, samples);
  }

  //! Bumps centered mid-phase: supports [0.1, 0.4] (minus) and [0.6, 0.9] (plus).
  static EntranceProfiles bumps(const FlowConstants& c, const BumpAmplitudes& a,
                                int samples = kDefaultSamples) {
    auto phase = [&](Phase p, double S_amp, double w_amp, double v_amp) {
      const double lo = p == Phase::minus ? 0.0 : 0.5;
      const double hi = p == Phase::minus ? 0.5 : 1.0;
      const double center = p == Phase::minus ? 0.25 : 0.75;
      const double S0 = c.S0(p);
      PhaseEntrance e;
      e.v = RadialProfile::sample(lo, hi, samples,
                                  [&](double r) { return v_amp * mollifier_bump(r, center, 0.15); });
      e.w = RadialProfile::sample(lo, hi, samples,
                                  [&](double r) { return w_amp * mollifier_bump(r, center, 0.15); });
      e.S = RadialProfile::sample(lo, hi, samples, [&](double r) {
        return S0 * (1.0 + S_amp * mollifier_bump(r, center, 0.15));
      });
      return e;
    };
    return EntranceProfiles(phase(Phase::plus, a.S_plus, a.w_plus, a.v_plus),
                            phase(Phase::minus, a.S_minus, a.w_minus, a.v_minus));
  }

  //! Bumps rescaled so that sigma() equals `target` (all-zero shapes give the background).
  static EntranceProfiles bumps_with_sigma(const FlowConstants& c, const BumpAmplitudes& shape,
                                           double target, int samples = kDefaultSamples) {
    const EntranceProfiles unit = bumps(c, shape, samples);
    const double s = unit.sigma(c);
    if (s == 0.0 || target == 0.0) return background(c, samples);
    return bumps(c, shape.scaled(target / s), samples);
  }

  const PhaseEntrance& phase(Phase p) const { return p == Phase::plus ? plus_ : minus_; }

  //! Entrance Dirichlet value of the potential perturbation: -int_{1/2}^r v.
  double potential(Phase p, double r) const {
    const RadialProfile& v = phase(p).v;
    return -(v.integral_to(r) - v.integral_to(0.5));
  }

  //! C2 norms of S - S0 and w plus the C1 norm of v, per phase.
  double sigma_phase(const FlowConstants& c, Phase p) const {
    const PhaseEntrance& e = phase(p);
    return e.S.c_norm(2, c.S0(p)) + e.w.c_norm(2) + e.v.c_norm(1);
  }
  double sigma(const FlowConstants& c) const {
    return sigma_phase(c, Phase::plus) + sigma_phase(c, Phase::minus);
  }

  //! v_plus = 0 outside [1/2 + eps, 1 - eps] and v_minus = 0 for r > 1/2 - eps.
  void validate_support(double eps, double tol = 1e-12) const {
    if (!(eps > 0.0 && eps < 0.1)) {
      fail(ErrorKind::ConfigError, "entrance.epsilon must lie in (0, 0.1)");
    }
    const RadialProfile& vp = plus_.v;
    for (std::size_t k = 0; k < vp.samples().size(); ++k) {
      const double r = vp.radius(k);
      if ((r < 0.5 + eps || r > 1.0 - eps) && std::abs(vp.samples()[k]) > tol) {
        fail(ErrorKind::ConfigError, "entrance.v_plus violates the support condition: v(" +
                                         std::to_string(r) + ") != 0 outside [1/2+eps, 1-eps]");
      }
    }
    const RadialProfile& vm = minus_.v;
    for (std::size_t k = 0; k < vm.samples().size(); ++k) {
      const double r = vm.radius(k);
      if (r > 0.5 - eps && std::abs(vm.samples()[k]) > tol) {
        fail(ErrorKind::ConfigError, "entrance.v_minus violates the support condition: v(" +
                                         std::to_string(r) + ") != 0 for r > 1/2-eps");
      }
    }
    for (Phase p : {Phase::plus, Phase::minus}) {
      for (double s : phase(p).S.samples()) {
        if (!(s > 0.0)) fail(ErrorKind::ConfigError, "entrance entropy must be positive");
      }
    }
  }

 private:
  PhaseEntrance plus_;
  PhaseEntrance minus_;
};

}  // namespace axicd
