#pragma once

#include "hawkes/core_model.hpp"
#include "hawkes/errors.hpp"
#include "hawkes/estimator.hpp"
#include "hawkes/goodness_of_fit.hpp"
#include "hawkes/io.hpp"
#include "hawkes/market_data.hpp"
#include "hawkes/nelder_mead.hpp"
#include "hawkes/pipeline.hpp"
#include "hawkes/rng.hpp"
#include "hawkes/scenarios.hpp"
#include "hawkes/simulator.hpp"
#include "hawkes/stats.hpp"
