#pragma once

#include "qlips/errors.hpp"
#include "qlips/types.hpp"
#include "qlips/geometry.hpp"
#include "qlips/basis.hpp"
#include "qlips/coefficient.hpp"
#include "qlips/operators.hpp"
#include "qlips/problem.hpp"
#include "qlips/assembly.hpp"
#include "qlips/solver.hpp"
#include "qlips/perturbation.hpp"
#include "qlips/metrics.hpp"
#include "qlips/config.hpp"
#include "qlips/run.hpp"
