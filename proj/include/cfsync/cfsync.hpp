#pragma once

// Umbrella header for the analysis library. The command layer (cli.hpp) is
// separate because it needs OpenSSL.

#include "cfsync/analysis.hpp"
#include "cfsync/case_io.hpp"
#include "cfsync/cf_estimator.hpp"
#include "cfsync/common.hpp"
#include "cfsync/disturbance_metrics.hpp"
#include "cfsync/dynamics.hpp"
#include "cfsync/generalized_inertia.hpp"
#include "cfsync/grid_model.hpp"
#include "cfsync/sync_detector.hpp"
#include "cfsync/trajectory_io.hpp"
