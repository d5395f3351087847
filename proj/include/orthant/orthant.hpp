#pragma once

#include "orthant/cone.hpp"
#include "orthant/config.hpp"
#include "orthant/error.hpp"
#include "orthant/estimators.hpp"
#include "orthant/exploration.hpp"
#include "orthant/grid.hpp"
#include "orthant/lattice.hpp"
#include "orthant/oracle.hpp"
#include "orthant/osss.hpp"
#include "orthant/parallel.hpp"
#include "orthant/reach.hpp"
#include "orthant/run.hpp"
#include "orthant/version.hpp"
#include "orthant/walk.hpp"
