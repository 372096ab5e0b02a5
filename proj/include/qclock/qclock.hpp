#pragma once

#include "qclock/constants.hpp"
#include "qclock/errors.hpp"
#include "qclock/numeric.hpp"
#include "qclock/geometry.hpp"
#include "qclock/internal.hpp"
#include "qclock/coherence.hpp"
#include "qclock/dynamics.hpp"
#include "qclock/scenario.hpp"
