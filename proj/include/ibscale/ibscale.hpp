#pragma once

#include "ibscale/baselines.hpp"
#include "ibscale/emit.hpp"
#include "ibscale/error.hpp"
#include "ibscale/hierarchy.hpp"
#include "ibscale/ib_solver.hpp"
#include "ibscale/manifest.hpp"
#include "ibscale/matrix.hpp"
#include "ibscale/partition.hpp"
#include "ibscale/probability.hpp"
#include "ibscale/responses.hpp"
#include "ibscale/scale_analysis.hpp"
