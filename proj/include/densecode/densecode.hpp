#pragma once

#include "densecode/analytic.hpp"
#include "densecode/error.hpp"
#include "densecode/feasibility.hpp"
#include "densecode/io.hpp"
#include "densecode/phasemap.hpp"
#include "densecode/protocol.hpp"
#include "densecode/qmat.hpp"
#include "densecode/random.hpp"
#include "densecode/refine.hpp"
