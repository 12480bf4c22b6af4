#pragma once
// Umbrella header for the whole library.

#include "optigrade/common.hpp"
#include "optigrade/dataset.hpp"
#include "optigrade/io/png_io.hpp"
#include "optigrade/metrics.hpp"
#include "optigrade/optics.hpp"
#include "optigrade/resample.hpp"
#include "optigrade/sweep.hpp"
