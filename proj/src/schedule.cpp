#include "chainlab/schedule.hpp"

#include <cmath>
#include <sstream>

#include "chainlab/errors.hpp"

namespace chainlab {

ScheduleParams schedule(double eps, double theta, double eta) {
  if (!(eps > 0.0 && eps < 1.0)) {
    std::ostringstream os;
    os << "schedule needs 0 < eps < 1, got " << eps;
    throw ArgumentError(os.str());
  }
  if (!(theta > 0.0) || !(eta > 0.0 && eta < 1.0))
    throw ArgumentError("schedule needs theta > 0 and 0 < eta < 1");
  const double L = -std::log(eps);
  ScheduleParams p;
  p.eps = eps;
  p.theta = theta;
  p.eta = eta;
  p.n_real = std::pow(L, theta);
  // pow(8, 1/3) comes out a hair above 2; a ceiling of the raw value would
  // then jump to 3. Values within a few ulps of an integer count as integers.
  const double nearest = std::round(p.n_real);
  const double n = std::abs(p.n_real - nearest) <= 1e-12 * std::max(1.0, nearest)
                       ? nearest
                       : std::ceil(p.n_real);
  p.n = static_cast<int>(std::max(1.0, n));
  p.delta = std::exp(-eta * L);
  p.eps_prime = std::exp(-(1.0 - eta) * L);
  p.phi = std::exp(0.5 * std::pow(L, 1.0 + theta));
  return p;
}

double threshold_eps_of_t(double t, double theta) {
  if (!(t >= 1.0)) {
    std::ostringstream os;
    os << "threshold eps(t) is defined for t >= 1, got " << t;
    throw ArgumentError(os.str());
  }
  return std::exp(-2.0 * std::pow(std::log(t), 1.0 / (1.0 + theta)));
}

ConditionCheck schedule_condition(int n, double delta, double c1) {
  if (n < 1 || !(delta > 0.0)) throw ArgumentError("condition check needs n >= 1, delta > 0");
  const double m = n + 1.0;
  // Evaluated in logs; the exponential overflows for moderate n.
  const double log_value = ((4.0 + c1 * std::log(m)) * m + std::log(delta)) / (2.0 * m);
  ConditionCheck c;
  c.value = std::exp(log_value);
  c.satisfied = c.value <= 0.5;
  return c;
}

nlohmann::json to_json(const ScheduleParams& p) {
  return {{"eps", p.eps},           {"theta", p.theta},   {"eta", p.eta},
          {"n", p.n},               {"n_real", p.n_real}, {"delta", p.delta},
          {"eps_prime", p.eps_prime}, {"phi", p.phi}};
}

}  // namespace chainlab
