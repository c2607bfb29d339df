#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mrdo/controllers.hpp"
#include "mrdo/scheme.hpp"
#include "mrdo/state.hpp"

namespace mrdo {

// native: initialize for the descriptor's native rule instead of the controller path.
StackedState init_state(const AlgorithmDescriptor& desc, const ObjectiveSuite& suite, const Mat& x0,
                        const GainSchedule& gains, bool native = false);

// One RK4 step of size h. Loops with tau = 0 are re-evaluated at every stage;
// sampled loops use their held outputs and resample when the tick lands on a
// sampling instant.
void micro_step(StackedState& s, const AlgorithmDescriptor& desc, const ObjectiveSuite& suite,
                const DiscretizationScheme& scheme, const GainSchedule& gains);

// One base step of a case III/IV/V iteration (base step = smallest tau).
void discrete_step(StackedState& s, const AlgorithmDescriptor& desc, const ObjectiveSuite& suite,
                   const DiscretizationScheme& scheme, const GainSchedule& gains, bool native = false);

struct TraceRow {
  double t;
  long k;
  double energy;
  double grad_avg_sq;
  double consensus_sq;
  double gap;
  double min_gap;
  // Not persisted to CSV.
  double consensus_y_sq = 0.0;
  double aux_norm = 0.0;
};

struct Trace {
  std::vector<TraceRow> rows;
  std::string status;  // converged | horizon | diverged
  double last_finite_t = 0.0;
  std::map<std::string, std::string> meta;
};

enum class RunMode { automatic, controller, native };

struct RunSpec {
  DiscretizationScheme scheme;
  GainSchedule gains;
  double horizon = 100.0;  // time for integrated runs, iterations for discrete runs
  int record_stride = 1;
  double target_gap = 0.0;
  RunMode mode = RunMode::automatic;
  double divergence_factor = 1e8;
};

bool uses_native(const AlgorithmDescriptor& desc, RunMode mode);

Trace simulate(const AlgorithmDescriptor& desc, const ObjectiveSuite& suite, const Mat& x0, const RunSpec& spec,
               StackedState* final_state = nullptr);

void write_trace_csv(const Trace& trace, const std::string& path);
Trace read_trace_csv(const std::string& path);

}  // namespace mrdo
