#pragma once

#include "xshift/simplex.hpp"
#include "xshift/rng.hpp"
#include "xshift/model.hpp"
#include "xshift/models.hpp"
#include "xshift/lattice.hpp"
#include "xshift/ctmc.hpp"
#include "xshift/master_equation.hpp"
#include "xshift/parallel.hpp"
#include "xshift/value.hpp"
#include "xshift/field_io.hpp"
#include "xshift/guide.hpp"
#include "xshift/strategy.hpp"
#include "xshift/stats.hpp"
#include "xshift/scenario.hpp"
#include "xshift/results.hpp"
#include "xshift/experiments.hpp"
#include "xshift/version.hpp"
