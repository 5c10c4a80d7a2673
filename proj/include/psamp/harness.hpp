#pragma once

// Experiment harness: configs, sweeps, CSV/JSON output, presets and checks.

#include "psamp/harness/config.hpp"
#include "psamp/harness/experiments.hpp"
#include "psamp/harness/pool.hpp"
#include "psamp/harness/presets.hpp"
#include "psamp/harness/records.hpp"
