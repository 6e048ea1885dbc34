#pragma once

#include "hamopt/control.hpp"
#include "hamopt/csv.hpp"
#include "hamopt/diagnostics.hpp"
#include "hamopt/integrate.hpp"
#include "hamopt/problem.hpp"
#include "hamopt/problems/factory.hpp"
#include "hamopt/pwm.hpp"
#include "hamopt/solver.hpp"
#include "hamopt/types.hpp"
