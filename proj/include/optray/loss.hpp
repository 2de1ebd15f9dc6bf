#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "optray/error.hpp"

namespace optray {

// Per-example losses l(z) evaluated on margins z = (Aw)_i. Both are convex,
// positive, vanish as z -> -inf and satisfy l' <= l, l'' <= l.
enum class LossKind { logistic, exponential };

inline std::string_view to_string(LossKind k) {
  return k == LossKind::logistic ? "logistic" : "exponential";
}

inline LossKind parse_loss(std::string_view s) {
  if (s == "logistic" || s == "log") return LossKind::logistic;
  if (s == "exponential" || s == "exp") return LossKind::exponential;
  fail(ErrorKind::usage, "unknown loss '" + std::string(s) + "'");
}

namespace loss {

// ln(1 + e^z) without overflow.
inline double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// e^z overflows to +inf beyond this point; callers see +inf and must treat it
// as a non-finite record.
inline constexpr double kExpOverflow = 709.0;

inline double value(LossKind k, double z) {
  if (k == LossKind::logistic) return softplus(z);
  return z > kExpOverflow ? HUGE_VAL : std::exp(z);
}

inline double deriv(LossKind k, double z) {
  if (k == LossKind::logistic) return sigmoid(z);
  return z > kExpOverflow ? HUGE_VAL : std::exp(z);
}

inline double second(LossKind k, double z) {
  if (k == LossKind::logistic) {
    const double s = sigmoid(z);
    return s * (1.0 - s);
  }
  return z > kExpOverflow ? HUGE_VAL : std::exp(z);
}

// ln l(z), finite even where l(z) underflows.
inline double log_value(LossKind k, double z) {
  if (k == LossKind::exponential) return z;
  if (z < -30.0) return z + std::log1p(std::exp(z) * -0.5);  // ln(e^z - e^2z/2 + ...)
  return std::log(softplus(z));
}

}  // namespace loss
}  // namespace optray
