#include "native.hpp"

#include "mrdo/kernels.hpp"

namespace mrdo::native {

namespace {

Mat grads(const ObjectiveSuite& s, const Mat& X) { return gradient_stack(s, X, default_exec()); }

Mat avg(const Mat& X) {
  Mat out(X.rows(), X.cols());
  out.rowwise() = X.colwise().mean();
  return out;
}

}  // namespace

NativeRule gradient_tracking(const Mat& W, double c) {
  NativeRule r;
  r.description = "x+ = W x - c v; v+ = W v + grad f(x+) - grad f(x)";
  r.init = [](StackedState& s, const ObjectiveSuite& f) { s.block(1) = grads(f, s.x()); };
  r.step = [W, c](StackedState& s, const ObjectiveSuite& f, long, int) {
    const Mat x = s.x();
    const Mat v = s.block(1);
    const Mat g_old = grads(f, x);
    const Mat x_new = W * x - c * v;
    s.block(1) = W * v + grads(f, x_new) - g_old;
    s.x() = x_new;
  };
  return r;
}

NativeRule dlm(const Mat& W, double c, double eta) {
  NativeRule r;
  r.description = "x+ = x - eta (grad f(x) + c (I-W) x + v); v+ = v + c (I-W) x+";
  r.init = [](StackedState&, const ObjectiveSuite&) {};
  r.step = [W, c, eta](StackedState& s, const ObjectiveSuite& f, long, int) {
    const Mat x = s.x();
    const Mat x_new = x - eta * (grads(f, x) + c * (x - W * x) + s.block(1));
    s.block(1) += c * (x_new - W * x_new);
    s.x() = x_new;
  };
  return r;
}

NativeRule fedavg(double eta) {
  NativeRule r;
  r.description = "x+ = (k mod Q == 0 ? R x : x) - eta grad f(x)";
  r.init = [](StackedState&, const ObjectiveSuite&) {};
  r.step = [eta](StackedState& s, const ObjectiveSuite& f, long k, int Q) {
    const Mat x = s.x();
    const Mat g = grads(f, x);
    s.x() = (k % Q == 0 ? avg(x) : x) - eta * g;
  };
  return r;
}

NativeRule fedprox(double eta1, double eta2) {
  NativeRule r;
  r.description = "x+ = (k mod Q == 0 ? R x : x) - eta1 grad f(x) - eta2 (x - x(k0))";
  r.init = [](StackedState& s, const ObjectiveSuite&) { s.aux = {s.x()}; };
  r.step = [eta1, eta2](StackedState& s, const ObjectiveSuite& f, long k, int Q) {
    const Mat x = s.x();
    if (k % Q == 0) s.aux[0] = x;
    const Mat g = grads(f, x);
    s.x() = (k % Q == 0 ? avg(x) : x) - eta1 * g - eta2 * (x - s.aux[0]);
  };
  return r;
}

NativeRule fedpd(double eta1, double eta2) {
  NativeRule r;
  r.description = "x+ = x - eta1 (grad f(x) + v + eta2 (x(k0) - R x(k0))); w, v refreshed every Q steps";
  // aux: [w, x(k0)]
  r.init = [](StackedState& s, const ObjectiveSuite&) { s.aux = {s.x(), s.x()}; };
  r.step = [eta1, eta2](StackedState& s, const ObjectiveSuite& f, long k, int Q) {
    const Mat x = s.x();
    if (k % Q == 0) s.aux[1] = x;
    const Mat& x0 = s.aux[1];
    const Mat x_new = x - eta1 * (grads(f, x) + s.block(1) + eta2 * (x0 - avg(x0)));
    if (k % Q == 0) {
      s.block(1) += (x - s.aux[0]) / eta2;
      s.aux[0] = avg(x);
    }
    s.x() = x_new;
  };
  return r;
}

NativeRule scaffold(double eta, double eta_g) {
  NativeRule r;
  r.description =
      "local: x+ = x - eta (grad f(x) - c_i + c); every Q steps: c_i <- c_i - c + (w - x)/(Q eta), "
      "w <- w + eta_g R(x - w), c <- R c_i, x <- w";
  // y block 1 holds c_i; aux: [w, c]
  r.init = [](StackedState& s, const ObjectiveSuite&) {
    s.block(1).setZero();
    s.aux = {s.x(), Mat::Zero(s.n_agents, s.y.cols())};
  };
  r.step = [eta, eta_g](StackedState& s, const ObjectiveSuite& f, long k, int Q) {
    if (k % Q == 0) {
      Mat& w = s.aux[0];
      Mat& c = s.aux[1];
      if (k > 0) {
        s.block(1) = s.block(1) - c + (w - s.x()) / (Q * eta);
        c = avg(s.block(1));
        w = w + eta_g * avg(s.x() - w);
      } else {
        w = avg(s.x());
      }
      s.x() = w;
    }
    const Mat x = s.x();
    s.x() = x - eta * (grads(f, x) - s.block(1) + s.aux[1]);
  };
  return r;
}

NativeRule scaffold_printed(double eta1, double eta2) {
  NativeRule r;
  r.description = "printed control-variate iteration with v, w, z updated every Q steps";
  // y block 1 holds v; aux: [w, z, v(k0)]
  r.init = [](StackedState& s, const ObjectiveSuite&) {
    const Mat zero = Mat::Zero(s.n_agents, s.y.cols());
    s.block(1).setZero();
    s.aux = {s.x(), zero, zero};
  };
  r.step = [eta1, eta2](StackedState& s, const ObjectiveSuite& f, long k, int Q) {
    const Mat x = s.x();
    const Mat v = s.block(1);
    Mat& w = s.aux[0];
    Mat& z = s.aux[1];
    Mat& v0 = s.aux[2];
    const bool round = k % Q == 0;
    if (round) v0 = v;
    Mat x_new = x - eta1 * (grads(f, x) - z + v0);
    if (round) x_new -= eta2 * (x - w);
    if (round) {
      s.block(1) = v - avg(v + (w - x) / (Q * eta1));
      w = avg(x);
    }
    z = z - v / Q - (x_new - x) / (Q * eta1);
    s.x() = x_new;
  };
  return r;
}

NativeRule xfilter(const Mat& W, double eta1, double eta2, double eta3) {
  NativeRule r;
  r.description =
      "x+ = x - eta1 eta2 (2I-W) x - (1-eta1)(x - x_prev) + eta1 eta2 v(k0); v, w1, w2 refreshed every K steps";
  // y block 1 holds v; aux: [x_prev, w1, w2, v(k0)]
  r.init = [eta3](StackedState& s, const ObjectiveSuite& f) {
    const Mat x = s.x();
    const Mat v = x - eta3 * grads(f, x);
    s.block(1) = v;
    s.aux = {x, v, v, v};
  };
  r.step = [W, eta1, eta2, eta3](StackedState& s, const ObjectiveSuite& f, long k, int K) {
    const Mat x = s.x();
    const Mat v = s.block(1);
    Mat& x_prev = s.aux[0];
    Mat& w1 = s.aux[1];
    Mat& w2 = s.aux[2];
    Mat& v0 = s.aux[3];
    const bool round = k % K == 0;
    if (round) v0 = v;
    const Mat x_new = x - eta1 * eta2 * (2.0 * x - W * x) - (1.0 - eta1) * (x - x_prev) + eta1 * eta2 * v0;
    if (round) {
      s.block(1) = v + (w1 - w2) - (x - W * x);
      w2 = w1;
      w1 = x - eta3 * grads(f, x);
    }
    x_prev = x;
    s.x() = x_new;
  };
  return r;
}

}  // namespace mrdo::native
