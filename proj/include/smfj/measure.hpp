#pragma once

#include "smfj/model.hpp"

namespace smfj {

// kappa = E[e^Y] - 1 for Y ~ N(mu_y, sigma_y^2): the mean relative jump size
// entering the drift compensation lambda*kappa.
double jump_kappa(double mu_y, double sigma_y);

// Esscher tilt parameter eta* solving E[e^{(eta+1)Y}] = E[e^{eta Y}], i.e. the
// tilt under which the jump part has zero mean relative size (kappa* = 0).
// Closed form for normal sizes: eta* = -mu_y / sigma_y^2 - 1/2.
// Throws when sigma_y = 0 and mu_y != 0 (no root exists).
double esscher_eta(double mu_y, double sigma_y);

// Jump law and intensity after the Esscher tilt:
//   Y* ~ N(mu_y + eta* sigma_y^2, sigma_y^2),   lambda* = lambda E[e^{eta* Y}].
struct TiltedJumps {
    double eta = 0.0;
    double lambda = 0.0;
    double mu_y = 0.0;
    double sigma_y = 0.0;
};
TiltedJumps esscher_tilt(const ModelParams& params);

// Drift restriction pinned by the pricing measure: with market prices of risk
// theta0 (Brownian) and a constant thetaH weighted by the kernel
// K(T,s) = (T-s)^{H-1/2} - s^{H-1/2},
//   mu = r + lambda*kappa - sigma0*theta0 - sigmaH * int_0^T thetaH K(T,s) ds.
// The kernel integral vanishes identically for constant thetaH.
double emm_drift(const ModelParams& params, double theta0, double theta_h, double maturity);

// int_0^T thetaH * K(T,s) ds by graded-panel Gauss quadrature (the endpoint
// singularities s^{H-1/2} and (T-s)^{H-1/2} are integrable for H > 0).
double emm_kernel_integral(double theta_h, double maturity, double hurst);

}  // namespace smfj
