#pragma once

// Per-agent batch kernels. Each has a serial reference and an OpenMP version;
// rows are independent, so both produce identical bits.

#include "mrdo/controllers.hpp"
#include "mrdo/problem.hpp"

namespace mrdo {

enum class Exec { serial, parallel };

// Thread cap from MRDO_THREADS (unset or invalid: OpenMP default).
int thread_limit();
// parallel unless MRDO_THREADS=1.
Exec default_exec();

Mat gradient_stack(const ObjectiveSuite& s, const Mat& X, Exec exec);
inline Mat suite_gradient_stack(const ObjectiveSuite& s, const Mat& X) { return gradient_stack(s, X, Exec::serial); }

struct LocalOutputs {
  Mat uy;
  Mat uz;
};

LocalOutputs local_outputs(const LocalController& l, const ObjectiveSuite& s, const Mat& y, const Mat& z, Exec exec);

}  // namespace mrdo
