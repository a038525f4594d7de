#pragma once

#include "tdr/assignment.hpp"
#include "tdr/box3d.hpp"
#include "tdr/calib.hpp"
#include "tdr/contour.hpp"
#include "tdr/danger.hpp"
#include "tdr/error.hpp"
#include "tdr/evalharness.hpp"
#include "tdr/geometry.hpp"
#include "tdr/kinematics.hpp"
#include "tdr/pipeline.hpp"
#include "tdr/simulate.hpp"
