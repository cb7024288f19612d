#pragma once

// Umbrella header: local fiber orientation analysis for 3D volume images.

#include "fiberorient/analysis.hpp"
#include "fiberorient/eigen_sym3.hpp"
#include "fiberorient/errors.hpp"
#include "fiberorient/filters.hpp"
#include "fiberorient/grid.hpp"
#include "fiberorient/io.hpp"
#include "fiberorient/math.hpp"
#include "fiberorient/orientation.hpp"
#include "fiberorient/parallel.hpp"
#include "fiberorient/phantom.hpp"
#include "fiberorient/report.hpp"
#include "fiberorient/segmentation.hpp"
#include "fiberorient/tensor_stats.hpp"
#include "fiberorient/version.hpp"
