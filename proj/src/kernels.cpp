#include "mrdo/kernels.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

#include "mrdo/errors.hpp"

namespace mrdo {

int thread_limit() {
  if (const char* env = std::getenv("MRDO_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<int>(v);
  }
  return omp_get_max_threads();
}

Exec default_exec() { return thread_limit() > 1 ? Exec::parallel : Exec::serial; }

namespace {

void check_shape(const ObjectiveSuite& s, const Mat& X) {
  if (X.rows() != s.n_agents() || X.cols() != s.dim) throw ConfigError("problem: gradient stack shape mismatch");
}

}  // namespace

Mat gradient_stack(const ObjectiveSuite& s, const Mat& X, Exec exec) {
  check_shape(s, X);
  const int n = s.n_agents();
  Mat G(n, s.dim);
  if (exec == Exec::serial) {
    for (int i = 0; i < n; ++i) G.row(i) = s.locals[i].gradient(X.row(i).transpose()).transpose();
    return G;
  }
#pragma omp parallel for schedule(static) num_threads(thread_limit())
  for (int i = 0; i < n; ++i) G.row(i) = s.locals[i].gradient(X.row(i).transpose()).transpose();
  return G;
}

LocalOutputs local_outputs(const LocalController& l, const ObjectiveSuite& s, const Mat& y, const Mat& z, Exec exec) {
  const int n = s.n_agents();
  LocalOutputs out{Mat::Zero(y.rows(), y.cols()), Mat::Zero(z.rows(), z.cols())};
  if (exec == Exec::serial) {
    for (int i = 0; i < n; ++i) l.apply_rows(s.locals[i], y, z, i, n, out.uy, out.uz);
    return out;
  }
#pragma omp parallel for schedule(static) num_threads(thread_limit())
  for (int i = 0; i < n; ++i) l.apply_rows(s.locals[i], y, z, i, n, out.uy, out.uz);
  return out;
}

}  // namespace mrdo
