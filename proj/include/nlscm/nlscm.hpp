#pragma once

#include "nlscm/config.hpp"
#include "nlscm/decay_fit.hpp"
#include "nlscm/decay_harness.hpp"
#include "nlscm/dispersive_probe.hpp"
#include "nlscm/error.hpp"
#include "nlscm/evolution.hpp"
#include "nlscm/ground_state_manifold.hpp"
#include "nlscm/linear_hamiltonian.hpp"
#include "nlscm/modulation.hpp"
#include "nlscm/nonlinearity.hpp"
#include "nlscm/persistence.hpp"
#include "nlscm/propagator.hpp"
#include "nlscm/radial_grid.hpp"
#include "nlscm/runner.hpp"
#include "nlscm/tridiagonal.hpp"
