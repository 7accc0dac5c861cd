#pragma once

#include "twinbeam/config.hpp"
#include "twinbeam/coupled_twin_beams.hpp"
#include "twinbeam/detection.hpp"
#include "twinbeam/fwm_source.hpp"
#include "twinbeam/gaussian_state.hpp"
#include "twinbeam/noise_budget.hpp"
#include "twinbeam/noise_trace.hpp"
#include "twinbeam/scenario.hpp"
#include "twinbeam/spatial_coupling.hpp"
#include "twinbeam/version.hpp"
