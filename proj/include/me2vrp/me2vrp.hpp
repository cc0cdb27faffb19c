#pragma once

#include "me2vrp/common.hpp"
#include "me2vrp/network.hpp"
#include "me2vrp/fleet.hpp"
#include "me2vrp/model.hpp"
#include "me2vrp/feasibility.hpp"
#include "me2vrp/exact.hpp"
#include "me2vrp/ccws.hpp"
#include "me2vrp/experiments.hpp"
#include "me2vrp/io.hpp"
