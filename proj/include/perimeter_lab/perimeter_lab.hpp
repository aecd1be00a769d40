#pragma once

#include "perimeter_lab/error.hpp"
#include "perimeter_lab/grid.hpp"
#include "perimeter_lab/gallery.hpp"
#include "perimeter_lab/domain_io.hpp"
#include "perimeter_lab/ball_geometry.hpp"
#include "perimeter_lab/measures.hpp"
#include "perimeter_lab/approx.hpp"
#include "perimeter_lab/constants.hpp"
#include "perimeter_lab/calibration.hpp"
#include "perimeter_lab/covering.hpp"
#include "perimeter_lab/gap_audit.hpp"
#include "perimeter_lab/experiment.hpp"
