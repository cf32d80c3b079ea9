#pragma once

// Shared model builders for the tests: the storage-competition instance
// (mean-reverting supply with multiplicative common noise, quadratic holdings
// penalty with preferred level alpha) and small degenerate variants.

#include "mfgprice/model.hpp"

namespace testmodels {

inline mfgprice::ModelSpec storage_instance(double alpha = 0.0) {
  mfgprice::ModelSpec spec;
  spec.c = 1.0;
  spec.T = 1.0;
  spec.q_bar = 1.0;
  spec.supply_drift.k0 = mfgprice::AffineComponent(1.0);
  spec.supply_drift.k1 = mfgprice::AffineComponent(-1.0);
  spec.supply_drift.k2 = mfgprice::AffineComponent(0.0);
  spec.supply_vol.k0 = mfgprice::AffineComponent(0.0);
  spec.supply_vol.k1 = mfgprice::AffineComponent(1.0);
  spec.supply_vol.k2 = mfgprice::AffineComponent(0.0);
  mfgprice::TerminalCost base;
  base.c2[0] = 1.0;  // Psi(x) = x^2 before the shift
  spec.terminal = mfgprice::shifted_in_x(base, alpha);
  spec.agents.family = mfgprice::InitialDistribution::Family::gaussian;
  spec.agents.mean = 0.0;
  spec.agents.variance = 1.0;
  spec.agents.seed = 1;
  return spec;
}

// Same instance with the common noise switched off.
inline mfgprice::ModelSpec storage_instance_deterministic(double alpha = 0.0) {
  mfgprice::ModelSpec spec = storage_instance(alpha);
  spec.supply_vol.k0 = mfgprice::AffineComponent(0.0);
  spec.supply_vol.k1 = mfgprice::AffineComponent(0.0);
  spec.supply_vol.k2 = mfgprice::AffineComponent(0.0);
  return spec;
}

// Driftless supply with unit additive noise and zero terminal cost; every
// derived coefficient that feeds the volatility ratio stays exactly zero.
inline mfgprice::ModelSpec additive_noise_instance() {
  mfgprice::ModelSpec spec;
  spec.c = 1.0;
  spec.T = 1.0;
  spec.q_bar = 0.5;
  spec.supply_vol.k0 = mfgprice::AffineComponent(1.0);
  spec.agents.family = mfgprice::InitialDistribution::Family::gaussian;
  spec.agents.mean = 0.2;
  spec.agents.variance = 1.0;
  spec.agents.seed = 3;
  return spec;
}

}  // namespace testmodels
