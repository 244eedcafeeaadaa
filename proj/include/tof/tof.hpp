// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Umbrella header for the tofsim library.

#pragma once

#include "tof/calibrate.hpp"
#include "tof/camera.hpp"
#include "tof/common.hpp"
#include "tof/grid.hpp"
#include "tof/json_config.hpp"
#include "tof/metrics.hpp"
#include "tof/motion.hpp"
#include "tof/pipeline.hpp"
#include "tof/reconstruct.hpp"
#include "tof/rng.hpp"
#include "tof/runconfig.hpp"
#include "tof/simulate.hpp"
#include "tof/tensor_io.hpp"
#include "tof/transient.hpp"
