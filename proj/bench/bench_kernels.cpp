#include <benchmark/benchmark.h>

#include <map>
#include <memory>

#include "mrdo/controllers.hpp"
#include "mrdo/graph.hpp"
#include "mrdo/kernels.hpp"
#include "mrdo/problem.hpp"
#include "mrdo/rng.hpp"

namespace {

struct Fixture {
  mrdo::ObjectiveSuite suite;
  mrdo::Mat X;
  mrdo::Mat y;
  mrdo::Mat z;
  mrdo::LocalController lcfl;

  explicit Fixture(int n)
      : suite(mrdo::generate_synthetic({mrdo::ProblemKind::logistic, n, 500, 10, 1.0, 0.1, 1.0, 7})),
        lcfl(mrdo::make_lcfl("tracking", suite, 1.0, 2)) {
    mrdo::Rng rng(11);
    X.resize(n, 10);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    y.resize(2 * n, 10);
    y << X, mrdo::Mat::Zero(n, 10);
    z = X;
  }
};

Fixture& fixture(int n) {
  static std::map<int, std::unique_ptr<Fixture>> cache;
  auto& f = cache[n];
  if (!f) f = std::make_unique<Fixture>(n);
  return *f;
}

void BM_GradientStack(benchmark::State& state, mrdo::Exec exec) {
  auto& f = fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mrdo::gradient_stack(f.suite, f.X, exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_LocalOutputs(benchmark::State& state, mrdo::Exec exec) {
  auto& f = fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mrdo::local_outputs(f.lcfl, f.suite, f.y, f.z, exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_GradientStack, serial, mrdo::Exec::serial)->Arg(20)->Arg(100);
BENCHMARK_CAPTURE(BM_GradientStack, parallel, mrdo::Exec::parallel)->Arg(20)->Arg(100);
BENCHMARK_CAPTURE(BM_LocalOutputs, serial, mrdo::Exec::serial)->Arg(20)->Arg(100);
BENCHMARK_CAPTURE(BM_LocalOutputs, parallel, mrdo::Exec::parallel)->Arg(20)->Arg(100);

BENCHMARK_MAIN();
