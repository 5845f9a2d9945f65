#include "compdoc/optimize.hpp"

#include <cmath>

#include "compdoc/error.hpp"
#include "compdoc/mathml.hpp"

namespace compdoc::opt {

void OptConfig::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) fail(Errc::invalid_config, std::string(name) + " must be positive and finite");
  };
  positive(initial_step, "initialStep");
  positive(step_shrink, "stepShrink");
  positive(min_step, "minStep");
  positive(convergence, "convergence");
  if (!(step_shrink < 1)) fail(Errc::invalid_config, "stepShrink must be below 1");
  if (!(min_step < initial_step)) fail(Errc::invalid_config, "minStep must be below initialStep");
  if (max_evaluations == 0) fail(Errc::invalid_config, "maxEvaluations must be positive");
}

OptTrace optimize(const EnergyFunction& energy, std::vector<double> start, const OptConfig& config) {
  config.validate();
  OptTrace trace;
  trace.coords = std::move(start);
  double best = energy(trace.coords);
  trace.evaluations = 1;
  if (!std::isfinite(best)) fail(Errc::numeric_domain, "energy at the starting coordinates is not finite");
  trace.initial_energy = best;
  double step = config.initial_step;
  trace.records.push_back({trace.evaluations, best, step});

  const auto finish = [&](bool converged, const char* reason) {
    trace.energy = best;
    trace.converged = converged;
    trace.reason = reason;
    return trace;
  };

  std::vector<double> probe = trace.coords;
  for (;;) {
    bool moved = false;
    for (std::size_t i = 0; i < trace.coords.size(); ++i) {
      for (const double sign : {1.0, -1.0}) {
        if (trace.evaluations >= config.max_evaluations) return finish(false, "budget");
        probe[i] = trace.coords[i] + sign * step;
        const double e = energy(probe);
        ++trace.evaluations;
        if (std::isfinite(e) && e < best) {
          const double gain = best - e;
          best = e;
          trace.coords[i] = probe[i];
          ++trace.accepted;
          moved = true;
          if (gain < config.convergence) {
            trace.records.push_back({trace.evaluations, best, step});
            return finish(true, "convergence");
          }
          break;
        }
        probe[i] = trace.coords[i];
      }
    }
    if (!moved) step *= config.step_shrink;
    trace.records.push_back({trace.evaluations, best, step});
    if (step < config.min_step) return finish(true, "minStep");
  }
}

std::string format_trace(const OptTrace& trace, const OptConfig& config) {
  using mathml::format_number;
  std::string out = "# optimizer trace\n";
  out += "# initialStep=" + format_number(config.initial_step) + " stepShrink=" + format_number(config.step_shrink) +
         " minStep=" + format_number(config.min_step) + " maxEvaluations=" + std::to_string(config.max_evaluations) +
         " convergence=" + format_number(config.convergence) + "\n";
  out += "record\tevaluations\tbestEnergy\tstepSize\n";
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    out += std::to_string(i) + "\t" + std::to_string(r.evaluations) + "\t" + format_number(r.best_energy) + "\t" +
           format_number(r.step) + "\n";
  }
  out += "# converged=" + std::string(trace.converged ? "true" : "false") + " reason=" + trace.reason +
         " evaluations=" + std::to_string(trace.evaluations) + " accepted=" + std::to_string(trace.accepted) +
         " initialEnergy=" + format_number(trace.initial_energy) + " energy=" + format_number(trace.energy) + "\n";
  return out;
}

}  // namespace compdoc::opt
