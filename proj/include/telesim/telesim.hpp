#pragma once

#include "telesim/compare.hpp"
#include "telesim/errors.hpp"
#include "telesim/filter.hpp"
#include "telesim/frames.hpp"
#include "telesim/geometry.hpp"
#include "telesim/haptics.hpp"
#include "telesim/metrics.hpp"
#include "telesim/report_io.hpp"
#include "telesim/run_log.hpp"
#include "telesim/scenario.hpp"
#include "telesim/simulator.hpp"
#include "telesim/stats.hpp"
#include "telesim/teleop.hpp"
#include "telesim/transport.hpp"
#include "telesim/types.hpp"
