#pragma once

/// Umbrella header.

#include "kecusp/analysis.hpp"
#include "kecusp/collapse.hpp"
#include "kecusp/config.hpp"
#include "kecusp/error.hpp"
#include "kecusp/geom.hpp"
#include "kecusp/linalg.hpp"
#include "kecusp/models.hpp"
#include "kecusp/newton.hpp"
#include "kecusp/run.hpp"
#include "kecusp/solver.hpp"
