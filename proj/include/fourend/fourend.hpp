#pragma once

#include "fourend/approx.hpp"
#include "fourend/core.hpp"
#include "fourend/diagnostics.hpp"
#include "fourend/experiments.hpp"
#include "fourend/field.hpp"
#include "fourend/geometry.hpp"
#include "fourend/linalg.hpp"
#include "fourend/potential.hpp"
#include "fourend/solver.hpp"
#include "fourend/toda.hpp"
