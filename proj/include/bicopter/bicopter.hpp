#pragma once

#include "bicopter/linalg.hpp"
#include "bicopter/model.hpp"
#include "bicopter/config.hpp"
#include "bicopter/estimator.hpp"
#include "bicopter/controller.hpp"
#include "bicopter/trajectory.hpp"
#include "bicopter/sim.hpp"
