#pragma once

// Discrete update rules that run without the controller path.

#include "mrdo/controllers.hpp"

namespace mrdo::native {

// x+ = W x - c v, v+ = W v + grad f(x+) - grad f(x)
NativeRule gradient_tracking(const Mat& W, double c);
// x+ = x - eta (grad f(x) + c (I-W) x + v), v+ = v + c (I-W) x+
NativeRule dlm(const Mat& W, double c, double eta);
NativeRule fedavg(double eta);
NativeRule fedprox(double eta1, double eta2);
NativeRule fedpd(double eta1, double eta2);
// Control-variate method with server averaging every Q local steps.
NativeRule scaffold(double eta, double eta_g);
NativeRule scaffold_printed(double eta1, double eta2);
NativeRule xfilter(const Mat& W, double eta1, double eta2, double eta3);

}  // namespace mrdo::native
