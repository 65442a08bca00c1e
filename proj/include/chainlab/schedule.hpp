#pragma once

#include "json.hpp"

namespace chainlab {

inline constexpr double kTheta = 1.0 / 3.0;
inline constexpr double kEta = 1.0 / 10.0;

// Parameters tied to a target level eps: order n, resonance threshold delta,
// the companion level eps_prime and the time scale phi.
struct ScheduleParams {
  double eps = 0.0;
  double theta = kTheta;
  double eta = kEta;
  int n = 0;
  double delta = 0.0;
  double eps_prime = 0.0;
  double phi = 0.0;
  // (ln 1/eps)^theta before rounding up.
  double n_real = 0.0;
};

ScheduleParams schedule(double eps, double theta = kTheta, double eta = kEta);

// eps(t) = exp(-2 (ln t)^{1/(1+theta)}), defined for t >= 1.
double threshold_eps_of_t(double t, double theta = kTheta);

// Whether (exp((4 + C1 ln(n+1))(n+1)) delta)^{1/(2(n+1))} <= 1/2; the
// left-hand side is returned in `value`.
struct ConditionCheck {
  double value = 0.0;
  bool satisfied = false;
};
ConditionCheck schedule_condition(int n, double delta, double c1);

nlohmann::json to_json(const ScheduleParams& p);

}  // namespace chainlab
