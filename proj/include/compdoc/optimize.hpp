#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace compdoc::opt {

struct OptConfig {
  double initial_step = 0.1;   // angstrom
  double step_shrink = 0.5;
  double min_step = 1e-5;      // angstrom
  std::size_t max_evaluations = 200000;
  double convergence = 1e-10;  // kcal/mol

  /// Throws invalid_config unless every field is positive, step_shrink < 1
  /// and min_step < initial_step.
  void validate() const;
};

struct OptRecord {
  std::size_t evaluations = 0;
  double best_energy = 0;
  double step = 0;
};

struct OptTrace {
  std::vector<OptRecord> records;  // one per sweep, plus the starting point
  std::vector<double> coords;
  double initial_energy = 0;
  double energy = 0;
  std::size_t evaluations = 0;
  std::size_t accepted = 0;
  bool converged = false;
  std::string reason;  // "minStep", "convergence" or "budget"
};

using EnergyFunction = std::function<double(std::span<const double>)>;

/// Compass search. Each sweep probes +step then -step along every coordinate
/// in order and moves to the first probe that strictly lowers the energy.
/// A sweep without a move shrinks the step. Non-finite probes are never
/// accepted; a non-finite starting energy is an error.
OptTrace optimize(const EnergyFunction& energy, std::vector<double> start, const OptConfig& config = {});

/// Plain-text trace: a header, one line per record, a result line.
std::string format_trace(const OptTrace& trace, const OptConfig& config);

}  // namespace compdoc::opt
