#pragma once

#include <stdexcept>
#include <string>

namespace mrdo {

// Invalid user input: bad config, violated schema invariant, unknown name.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A bound calculator could not produce a feasible budget.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double last_finite_t)
      : std::runtime_error(what), last_finite_t_(last_finite_t) {}
  double last_finite_t() const { return last_finite_t_; }

 private:
  double last_finite_t_;
};

}  // namespace mrdo
