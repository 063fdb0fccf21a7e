#include "ffprep/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ffprep/types.hpp"

namespace ffprep {

namespace {

// below this exponent exp() is subnormal or zero
constexpr double kMinExponent = -708.0;

// Panels of the cached cumulative table over [0, 1/2], graded toward 0.
constexpr int kPanels = 512;

// Smallest t where the bump is nonzero in double precision.
double bump_onset(double alpha) {
  const double c = std::pow(-kMinExponent, -alpha);
  if (c >= 0.25) return 0.5;
  return 0.5 * (1.0 - std::sqrt(1.0 - 4.0 * c));
}

double integrate_bump(double alpha, double a, double b, double rel_tol, double* error) {
  using boost::math::quadrature::gauss_kronrod;
  // An identically zero stretch would never meet a relative tolerance.
  a = std::max(a, bump_onset(alpha));
  if (error) *error = 0.0;
  if (b <= a) return 0.0;
  double err = 0.0;
  const double value = gauss_kronrod<double, 21>::integrate(
      [alpha](double t) { return gevrey_bump(alpha, t); }, a, b, 15, rel_tol, &err);
  if (error) *error = err;
  return value;
}

double checked_alpha(double alpha) {
  if (!(alpha > 0.0)) throw InvalidInput("Gevrey alpha must be > 0");
  return alpha;
}

}  // namespace

double gevrey_bump(double alpha, double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double exponent = -1.0 / std::pow((1.0 - t) * t, 1.0 / alpha);
  if (exponent < kMinExponent) return 0.0;
  return std::exp(exponent);
}

QuadratureValue gevrey_f_with_error(double alpha, double s, double rel_tol) {
  checked_alpha(alpha);
  if (!(s >= 0.0 && s <= 1.0)) throw InvalidInput("schedule argument outside [0,1]");
  if (s == 0.0) return {0.0, 0.0};
  if (s == 1.0) return {1.0, 0.0};
  if (s == 0.5) return {0.5, 0.0};
  // f(s) + f(1-s) = 1; integrate only up to the nearer endpoint.
  double half_err = 0.0;
  const double half = integrate_bump(alpha, 0.0, 0.5, rel_tol, &half_err);
  const double near = std::min(s, 1.0 - s);
  double part_err = 0.0;
  const double part = integrate_bump(alpha, 0.0, near, rel_tol, &part_err);
  const double ratio = 0.5 * part / half;
  const double err = 0.5 * (part_err / half + part * half_err / (half * half));
  return {s < 0.5 ? ratio : 1.0 - ratio, err};
}

double gevrey_f(double alpha, double s) {
  const auto q = gevrey_f_with_error(alpha, s, 1e-13);
  if (q.error > 1e-12) throw NumericalError("Gevrey schedule quadrature did not reach 1e-12");
  return q.value;
}

Schedule Schedule::gevrey(double alpha) {
  checked_alpha(alpha);
  // s_ holds panel nodes on [0, 1/2], f_ the cumulative integral at each node.
  std::vector<double> nodes(kPanels + 1);
  std::vector<double> cumulative(kPanels + 1, 0.0);
  for (int i = 0; i <= kPanels; ++i) {
    const double x = static_cast<double>(i) / kPanels;
    nodes[static_cast<std::size_t>(i)] = 0.5 * x * x;
  }
  const double onset = bump_onset(alpha);
  for (std::size_t i = 1; i <= kPanels; ++i) {
    const double a = std::max(nodes[i - 1], onset);
    double piece = 0.0;
    if (nodes[i] > a) {
      piece = boost::math::quadrature::gauss<double, 30>::integrate(
          [alpha](double t) { return gevrey_bump(alpha, t); }, a, nodes[i]);
    }
    cumulative[i] = cumulative[i - 1] + piece;
  }
  Schedule out(ScheduleKind::gevrey, alpha, 2.0 * cumulative.back());
  out.s_ = std::move(nodes);
  out.f_ = std::move(cumulative);
  return out;
}

Schedule Schedule::linear() { return Schedule(ScheduleKind::linear, 0.0, 1.0); }

Schedule Schedule::table(std::vector<double> s, std::vector<double> f) {
  if (s.size() != f.size() || s.size() < 2) throw InvalidInput("schedule table needs >= 2 rows");
  if (s.front() != 0.0 || s.back() != 1.0) throw InvalidInput("schedule table must span s in [0,1]");
  if (f.front() != 0.0 || f.back() != 1.0) throw InvalidInput("schedule table must map 0->0 and 1->1");
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!(s[i] > s[i - 1])) throw InvalidInput("schedule table s column must be increasing");
    if (f[i] < f[i - 1]) throw InvalidInput("schedule table is not monotone");
  }
  Schedule out(ScheduleKind::table, 0.0, 1.0);
  out.s_ = std::move(s);
  out.f_ = std::move(f);
  return out;
}

double Schedule::operator()(double s) const {
  if (!(s >= 0.0 && s <= 1.0)) throw InvalidInput("schedule argument outside [0,1]");
  switch (kind_) {
    case ScheduleKind::linear:
      return s;
    case ScheduleKind::gevrey: {
      if (s == 0.0 || s == 1.0 || s == 0.5) return s;
      const double near = std::min(s, 1.0 - s);
      const auto it = std::upper_bound(s_.begin(), s_.end(), near);
      const auto k = static_cast<std::size_t>(it - s_.begin()) - 1;
      double partial = f_[k];
      const double a = std::max(s_[k], bump_onset(alpha_));
      if (near > a) {
        const double alpha = alpha_;
        partial += boost::math::quadrature::gauss<double, 30>::integrate(
            [alpha](double t) { return gevrey_bump(alpha, t); }, a, near);
      }
      const double ratio = partial / norm_;
      return s < 0.5 ? ratio : 1.0 - ratio;
    }
    case ScheduleKind::table: {
      const auto it = std::upper_bound(s_.begin(), s_.end(), s);
      if (it == s_.end()) return f_.back();
      const auto i = static_cast<std::size_t>(it - s_.begin());
      const double w = (s - s_[i - 1]) / (s_[i] - s_[i - 1]);
      return (1.0 - w) * f_[i - 1] + w * f_[i];
    }
  }
  return s;
}

Schedule load_schedule_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open schedule table " + path.string());
  std::vector<double> s;
  std::vector<double> f;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double a = 0.0;
    double b = 0.0;
    if (!(row >> a >> b)) {
      if (first) {
        first = false;
        continue;
      }
      throw InvalidInput("malformed schedule row: " + line);
    }
    first = false;
    s.push_back(a);
    f.push_back(b);
  }
  return Schedule::table(std::move(s), std::move(f));
}

std::array<double, 2> endpoint_flatness(const Schedule& schedule, int order, double h) {
  if (order < 0 || order > 6) throw InvalidInput("flatness order must be in [0,6]");
  if (!(h > 0.0 && h <= 0.05)) throw InvalidInput("flatness step must be in (0, 0.05]");
  auto f = [&](double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return schedule(s);
  };
  if (order == 0) return {std::abs(f(h)), std::abs(f(1.0 - h) - 1.0)};
  auto quotient = [&](double x) {
    double acc = 0.0;
    double binom = 1.0;
    for (int j = 0; j <= order; ++j) {
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      acc += sign * binom * f(x + (0.5 * order - j) * h);
      binom = binom * (order - j) / (j + 1);
    }
    return std::abs(acc) / std::pow(h, order);
  };
  return {quotient(h), quotient(1.0 - h)};
}

}  // namespace ffprep
