#pragma once

#include "tdbsde/analysis.hpp"
#include "tdbsde/core.hpp"
#include "tdbsde/delay.hpp"
#include "tdbsde/errors.hpp"
#include "tdbsde/fbsde.hpp"
#include "tdbsde/harness.hpp"
#include "tdbsde/parallel.hpp"
#include "tdbsde/presets.hpp"
#include "tdbsde/reflect.hpp"
#include "tdbsde/regress.hpp"
#include "tdbsde/simulate.hpp"
#include "tdbsde/solver.hpp"
