#pragma once

#include "adtarget/errors.hpp"
#include "adtarget/mckp_solver.hpp"
#include "adtarget/oracle.hpp"
#include "adtarget/prefix_gen.hpp"
#include "adtarget/report.hpp"
#include "adtarget/stats_model.hpp"
#include "adtarget/strategy_engine.hpp"
