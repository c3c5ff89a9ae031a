#pragma once

// Structural reliability toolkit: failure probability estimation by FORM,
// Monte Carlo and importance sampling, plus variance-based reliability
// sensitivity indices computed from a single sample set by reweighting with
// perturbed-covariance densities.

#include "relsens/config.hpp"
#include "relsens/distributions.hpp"
#include "relsens/error.hpp"
#include "relsens/expression.hpp"
#include "relsens/form.hpp"
#include "relsens/harness.hpp"
#include "relsens/limit_state.hpp"
#include "relsens/linalg.hpp"
#include "relsens/normal.hpp"
#include "relsens/rng.hpp"
#include "relsens/sampling.hpp"
#include "relsens/sensitivity.hpp"
#include "relsens/transform.hpp"
