#pragma once

// Spectral wavefunctions in a 1-D box, guidance trajectories across
// truncation ladders, and fractal-dimension measurement.

#include "qfbox/config.hpp"
#include "qfbox/domain.hpp"
#include "qfbox/dynamics.hpp"
#include "qfbox/evaluate.hpp"
#include "qfbox/fractal.hpp"
#include "qfbox/io.hpp"
#include "qfbox/mathutil.hpp"
#include "qfbox/observables.hpp"
#include "qfbox/state.hpp"
#include "qfbox/version.hpp"
