#pragma once

// Convenience umbrella: the whole library in one include.

#include "pourplan/benchmark.hpp"
#include "pourplan/cmaes.hpp"
#include "pourplan/config.hpp"
#include "pourplan/container.hpp"
#include "pourplan/datagen.hpp"
#include "pourplan/dataset.hpp"
#include "pourplan/episode.hpp"
#include "pourplan/errors.hpp"
#include "pourplan/features.hpp"
#include "pourplan/geometry.hpp"
#include "pourplan/laminar.hpp"
#include "pourplan/lbfgs.hpp"
#include "pourplan/mlp.hpp"
#include "pourplan/outcomes.hpp"
#include "pourplan/outflow.hpp"
#include "pourplan/planner.hpp"
#include "pourplan/problem.hpp"
#include "pourplan/reward.hpp"
#include "pourplan/rng.hpp"
#include "pourplan/sim.hpp"
#include "pourplan/spline.hpp"
#include "pourplan/transform.hpp"
#include "pourplan/util.hpp"
