#pragma once

#include <compare>
#include <numbers>

namespace cavdet {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Angular frequency stored in rad/us. Lab values are quoted as f = Omega/2pi
// in MHz; construct those through from_mhz so the 2pi is applied once.
class AngularRate {
 public:
  constexpr AngularRate() = default;

  static constexpr AngularRate from_rad_per_us(double w) { return AngularRate(w); }
  static constexpr AngularRate from_mhz(double f_over_2pi) { return AngularRate(kTwoPi * f_over_2pi); }

  constexpr double rad_per_us() const { return value_; }
  constexpr double over_2pi_mhz() const { return value_ / kTwoPi; }

  constexpr auto operator<=>(const AngularRate&) const = default;

  constexpr AngularRate operator+(AngularRate o) const { return AngularRate(value_ + o.value_); }
  constexpr AngularRate operator*(double s) const { return AngularRate(value_ * s); }

 private:
  constexpr explicit AngularRate(double w) : value_(w) {}
  double value_ = 0.0;
};

inline constexpr AngularRate mhz(double f_over_2pi) { return AngularRate::from_mhz(f_over_2pi); }

}  // namespace cavdet
