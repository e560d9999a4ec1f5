#pragma once
// Umbrella header.

#include "normgrid/actions.hpp"
#include "normgrid/config.hpp"
#include "normgrid/detector.hpp"
#include "normgrid/egta.hpp"
#include "normgrid/experiments.hpp"
#include "normgrid/features.hpp"
#include "normgrid/game.hpp"
#include "normgrid/io.hpp"
#include "normgrid/learner.hpp"
#include "normgrid/rng.hpp"
#include "normgrid/shaping.hpp"
#include "normgrid/text.hpp"
#include "normgrid/trace.hpp"
#include "normgrid/trainer.hpp"
#include "normgrid/world.hpp"
