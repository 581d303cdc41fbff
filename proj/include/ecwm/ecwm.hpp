#pragma once

#include "ecwm/errors.hpp"
#include "ecwm/finite_field.hpp"
#include "ecwm/elliptic_curve.hpp"
#include "ecwm/switching.hpp"
#include "ecwm/watermark.hpp"
#include "ecwm/cps_sim.hpp"
#include "ecwm/analysis.hpp"
