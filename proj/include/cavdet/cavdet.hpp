#pragma once

// Umbrella header.

#include "cavdet/analysis.hpp"
#include "cavdet/click_stream.hpp"
#include "cavdet/config.hpp"
#include "cavdet/correlation.hpp"
#include "cavdet/errors.hpp"
#include "cavdet/event_simulator.hpp"
#include "cavdet/exp_fit.hpp"
#include "cavdet/keyvalue.hpp"
#include "cavdet/philox.hpp"
#include "cavdet/physics_model.hpp"
#include "cavdet/rate_model.hpp"
#include "cavdet/scenario.hpp"
#include "cavdet/units.hpp"
