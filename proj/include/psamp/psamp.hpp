#pragma once

#include "psamp/amp.hpp"
#include "psamp/core.hpp"
#include "psamp/denoising.hpp"
#include "psamp/quadrature.hpp"
#include "psamp/sensing.hpp"
#include "psamp/signal_models.hpp"
#include "psamp/state_evolution.hpp"
