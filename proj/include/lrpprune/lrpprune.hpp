#pragma once

// Umbrella header for the whole library.

#include "lrpprune/analysis.hpp"
#include "lrpprune/checkpoint.hpp"
#include "lrpprune/criteria.hpp"
#include "lrpprune/csv.hpp"
#include "lrpprune/datagen.hpp"
#include "lrpprune/error.hpp"
#include "lrpprune/experiment.hpp"
#include "lrpprune/network.hpp"
#include "lrpprune/plot.hpp"
#include "lrpprune/pruning.hpp"
#include "lrpprune/relevance.hpp"
#include "lrpprune/rng.hpp"
#include "lrpprune/types.hpp"
