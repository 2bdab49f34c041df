#pragma once

// Umbrella header for the minute-bar backtesting library.

#include "mbt/bars.hpp"
#include "mbt/column.hpp"
#include "mbt/csv.hpp"
#include "mbt/data_pipeline.hpp"
#include "mbt/errors.hpp"
#include "mbt/features.hpp"
#include "mbt/forest.hpp"
#include "mbt/indicators.hpp"
#include "mbt/metrics.hpp"
#include "mbt/orchestrator.hpp"
#include "mbt/rng.hpp"
#include "mbt/signals.hpp"
#include "mbt/simulator.hpp"
#include "mbt/synth.hpp"
#include "mbt/timeutil.hpp"
