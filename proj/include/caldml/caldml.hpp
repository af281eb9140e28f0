#pragma once

#include "caldml/calibration.hpp"
#include "caldml/core.hpp"
#include "caldml/dgp.hpp"
#include "caldml/errors.hpp"
#include "caldml/estimators.hpp"
#include "caldml/harness.hpp"
#include "caldml/la.hpp"
#include "caldml/learners.hpp"
#include "caldml/metrics.hpp"
#include "caldml/rng.hpp"
