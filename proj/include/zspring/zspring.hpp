#pragma once

// Umbrella header: analytically integrated zero-restlength spring dynamics
// over piecewise-cubic kinematic targets, with per-particle stiffness/damping
// learning from ground-truth trajectories.

#include "zspring/backward_euler.hpp"
#include "zspring/fitting.hpp"
#include "zspring/gradient.hpp"
#include "zspring/io.hpp"
#include "zspring/kinematics.hpp"
#include "zspring/special_functions.hpp"
#include "zspring/spring.hpp"
#include "zspring/trajectory.hpp"
#include "zspring/vec3.hpp"
