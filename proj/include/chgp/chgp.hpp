#pragma once

// Umbrella header for the library (the CLI lives in chgp/cli.hpp).

#include "chgp/errors.hpp"
#include "chgp/quadrature.hpp"
#include "chgp/specfun.hpp"
#include "chgp/kernels.hpp"
#include "chgp/rng.hpp"
#include "chgp/design.hpp"
#include "chgp/gp.hpp"
#include "chgp/estimate.hpp"
#include "chgp/simulate.hpp"
#include "chgp/experiments.hpp"
#include "chgp/io.hpp"
