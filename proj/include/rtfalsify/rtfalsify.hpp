#pragma once

#include "rtfalsify/aggregate.hpp"
#include "rtfalsify/cli.hpp"
#include "rtfalsify/expr.hpp"
#include "rtfalsify/monitor.hpp"
#include "rtfalsify/search.hpp"
#include "rtfalsify/sim.hpp"
#include "rtfalsify/table.hpp"
