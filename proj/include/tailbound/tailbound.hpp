#pragma once

#include "tailbound/baselines.hpp"
#include "tailbound/ecdf.hpp"
#include "tailbound/errors.hpp"
#include "tailbound/estimator.hpp"
#include "tailbound/io.hpp"
#include "tailbound/kernels.hpp"
#include "tailbound/lp.hpp"
#include "tailbound/pilot.hpp"
#include "tailbound/report.hpp"
#include "tailbound/simulate.hpp"
#include "tailbound/theory.hpp"
