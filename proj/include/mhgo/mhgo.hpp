#pragma once

#include "mhgo/analysis.hpp"
#include "mhgo/closed_loop.hpp"
#include "mhgo/compare.hpp"
#include "mhgo/control.hpp"
#include "mhgo/csv.hpp"
#include "mhgo/error.hpp"
#include "mhgo/numerics.hpp"
#include "mhgo/observers.hpp"
#include "mhgo/plant.hpp"
#include "mhgo/report.hpp"
#include "mhgo/scenario.hpp"
#include "mhgo/simulation.hpp"
