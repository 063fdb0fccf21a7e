#pragma once

#include <array>
#include <filesystem>
#include <vector>

namespace ffprep {

/// Bump f_α(t) = exp(-1/((1-t)t)^{1/α}) on (0,1); exactly 0 where it underflows
/// and outside the open interval.
double gevrey_bump(double alpha, double t);

struct QuadratureValue {
  double value = 0.0;
  double error = 0.0;  // absolute error estimate of `value`
};

/// ∫_0^s f_α / ∫_0^1 f_α with the given relative quadrature tolerance.
QuadratureValue gevrey_f_with_error(double alpha, double s, double rel_tol);

/// Normalized Gevrey-class reparameterization, |error| <= 1e-12.
double gevrey_f(double alpha, double s);

enum class ScheduleKind { gevrey, linear, table };

/// Monotone reparameterization [0,1] -> [0,1] with f(0)=0 and f(1)=1.
class Schedule {
 public:
  static Schedule gevrey(double alpha);
  static Schedule linear();
  /// Piecewise-linear table; validated for endpoints, ordering and monotonicity.
  static Schedule table(std::vector<double> s, std::vector<double> f);

  double operator()(double s) const;

  ScheduleKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  /// ∫_0^1 f_α for Gevrey schedules (cached at construction), 1 otherwise.
  double normalization() const { return norm_; }

 private:
  Schedule(ScheduleKind kind, double alpha, double norm) : kind_(kind), alpha_(alpha), norm_(norm) {}

  ScheduleKind kind_;
  double alpha_ = 0.0;
  double norm_ = 1.0;
  std::vector<double> s_;
  std::vector<double> f_;
};

/// Two-column CSV (s, f(s)); a non-numeric first line is treated as a header.
Schedule load_schedule_csv(const std::filesystem::path& path);

/// k-th central difference quotients |Δ_h^k f| / h^k at s = h and s = 1 - h,
/// with f extended by 0 below 0 and by 1 above 1. k = 0 returns |f(h)| and
/// |f(1-h) - 1|.
std::array<double, 2> endpoint_flatness(const Schedule& schedule, int order, double h);

}  // namespace ffprep
