#include <cmath>

#include "oql/oracle.hpp"

namespace oql::oracle {

double regret_bound_value(BoundKind kind, const BoundArgs& args) {
  if (!(args.states >= 1.0 && args.actions >= 1.0 && args.T >= 1.0 &&
        args.tau_pi >= 0.0 && args.distortion >= 0.0 && args.horizon >= 1.0)) {
    throw ConfigError("regret_bound_value: argument below its domain minimum");
  }
  const double sa = args.states * args.actions;
  const double T = args.T;
  const double log_term = std::log(2.0 * T * T);
  if (kind == BoundKind::theorem1) {
    const double tau = args.horizon;
    return 24.0 * std::pow(tau, 1.5) * std::sqrt(sa * T * log_term) +
           (3.0 * args.distortion + args.tau_pi / tau) * T +
           (sa + 5.0 + 2.0 * std::log(T)) * tau;
  }
  return (120.0 * std::sqrt(sa * log_term) + 5.0 * args.tau_pi) * std::pow(T, 0.8) +
         3.0 * args.distortion * T +
         (54.0 * sa + 18.0 * std::log(T)) * std::pow(T, 0.2) +
         2.0 * std::pow(args.tau_pi, 5.0);
}

BoundKind parse_bound_kind(const std::string& name) {
  if (name == "theorem1") return BoundKind::theorem1;
  if (name == "theorem2") return BoundKind::theorem2;
  throw ConfigError("unknown bound kind '" + name + "' (expected theorem1 or theorem2)");
}

}  // namespace oql::oracle
