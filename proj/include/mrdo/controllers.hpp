#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mrdo/graph.hpp"
#include "mrdo/problem.hpp"
#include "mrdo/scheme.hpp"
#include "mrdo/state.hpp"

namespace mrdo {

// Linear operator on y given as an explicit (blocks*N) x (blocks*N) matrix; it acts
// on every column of y, i.e. as M kron I_d.
class GlobalController {
 public:
  GlobalController(std::string name, Mat matrix, int n_agents, double declared_c_g, bool persistent = true);

  const std::string& name() const { return name_; }
  int n_agents() const { return n_; }
  int blocks() const { return static_cast<int>(matrix_.rows()) / n_; }
  const Mat& matrix() const { return matrix_; }
  double declared_c_g() const { return declared_c_g_; }
  // false: impulse GCFL, applied as an atomic event at sampling instants.
  bool persistent() const { return persistent_; }
  Mat apply(const Mat& y) const { return matrix_ * y; }

  // (memory block, source block) pairs copied at initialization.
  std::vector<std::pair<int, int>> memory_pairs;

 private:
  std::string name_;
  Mat matrix_;
  int n_;
  double declared_c_g_;
  bool persistent_;
};

// blockdiag(I - W) over `blocks` blocks; declared C_g = 1 - lambda2(W).
GlobalController make_consensus_gcfl(const Mat& W, int blocks = 1);
GlobalController make_consensus_gcfl(const GraphModel& g, int blocks = 1);

double accelerated_momentum(double lambda2);
double accelerated_c_g(double c_g);

// (I - R) [[I - (c+1)W, cI], [-I, I]] acting on (p, memory of p) for each of the
// `primary_blocks` leading blocks. Layout: [p_0 .. p_{P-1}, m_0 .. m_{P-1}].
GlobalController make_accelerated_gcfl(const GraphModel& g, int primary_blocks = 1);

// [[a(I-W), b I], [-r(I-W), 0]] on y = [x; v].
GlobalController make_primal_dual_gcfl(const std::string& name, const Mat& W, double a, double b, double r,
                                       double declared_c_g);

enum class LocalKind { gradient, tracking, dgpda };

struct LocalConstants {
  double L = 0.0;
  double alpha = 0.0;
  double c_x = 0.0;
  double c_v = 0.0;
  double c_z = 0.0;
  bool estimated = false;
};

struct AgentInput {
  Vec x;
  Mat v;  // (blocks-1) x d
  Mat z;  // z_blocks x d
};

struct AgentOutput {
  Vec ux;
  Mat uv;
  Mat uz;
};

class LocalController {
 public:
  LocalController(LocalKind kind, int y_blocks, int z_blocks, double c, LocalConstants declared);

  LocalKind kind() const { return kind_; }
  int y_blocks() const { return y_blocks_; }
  int z_blocks() const { return z_blocks_; }
  double gain() const { return c_; }
  const LocalConstants& declared() const { return declared_; }
  LocalConstants& declared() { return declared_; }
  // Lipschitz constant as printed for tracking, max{L_f, c, 1}; kept for reference.
  double printed_L = 0.0;

  AgentOutput apply(const LocalObjective& f, const AgentInput& in) const;
  // Writes rows of agent i into uy (blocks*N x d) and uz.
  void apply_rows(const LocalObjective& f, const Mat& y, const Mat& z, int i, int n, Mat& uy, Mat& uz) const;

  bool has_init_rule() const { return kind_ != LocalKind::gradient; }
  // Places (v, z) on the manifold the declared P4 constants refer to.
  void init_rule(const LocalObjective& f, const Vec& x, Mat& v, Mat& z) const;

 private:
  LocalKind kind_;
  int y_blocks_;
  int z_blocks_;
  double c_;
  LocalConstants declared_;
};

// Gradient: u_x = grad f. Tracking: u_x = c v, u_v = -grad f(x) + grad f(z), u_z = z - x.
// D-GPDA: u_x = grad f, u_m = m - x on the memory block.
LocalController make_lcfl(const std::string& kind, const ObjectiveSuite& suite, double c = 1.0, int y_blocks = 1);

using Params = std::map<std::string, double>;

// Discrete update rule that bypasses the controller path.
struct NativeRule {
  std::string description;
  std::function<void(StackedState&, const ObjectiveSuite&)> init;
  // period: Q (case IV) or K (case V); k is the iteration index before the step.
  std::function<void(StackedState&, const ObjectiveSuite&, long k, int period)> step;
};

struct AlgorithmDescriptor {
  std::string name;
  GlobalController gcfl;
  LocalController lcfl;
  Case case_tag;
  DiscretizationScheme default_scheme;
  double eta_g = 1.0;
  double eta_l = 1.0;
  std::optional<NativeRule> native;
  bool native_only = false;
  std::string continuous_form;
  std::vector<std::string> warnings;

  int d_v() const { return gcfl.blocks() - 1; }
  int d_z() const { return lcfl.z_blocks(); }
};

const std::vector<std::string>& catalog_names();

AlgorithmDescriptor catalog(const std::string& name, const GraphModel& graph, const ObjectiveSuite& suite,
                            const Params& params = {});

}  // namespace mrdo
