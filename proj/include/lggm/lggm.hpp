#pragma once

// Joint estimation of category-specific and systemic sparse precision
// matrices from dependent panel data: one-step moment estimator, graphical
// EM, tuning-parameter selection, simulators, recovery metrics and
// structure tests.

#include "lggm/em.hpp"
#include "lggm/errors.hpp"
#include "lggm/evaluate.hpp"
#include "lggm/fit_report.hpp"
#include "lggm/glasso.hpp"
#include "lggm/hypotest.hpp"
#include "lggm/io.hpp"
#include "lggm/likelihood.hpp"
#include "lggm/onestep.hpp"
#include "lggm/panel.hpp"
#include "lggm/rng.hpp"
#include "lggm/select.hpp"
#include "lggm/simulate.hpp"
#include "lggm/stack.hpp"
#include "lggm/version.hpp"
