#pragma once

#include "badapprox/certified.hpp"
#include "badapprox/constants.hpp"
#include "badapprox/core.hpp"
#include "badapprox/shells.hpp"
#include "badapprox/fixed_point.hpp"
#include "badapprox/best_approx.hpp"
#include "badapprox/lacunary.hpp"
#include "badapprox/fractal.hpp"
#include "badapprox/ktv_engine.hpp"
#include "badapprox/verifier.hpp"
#include "badapprox/report.hpp"
