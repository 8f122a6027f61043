#pragma once

// Umbrella header.

#include "market_lattice.hpp"
#include "dynkin.hpp"
#include "payoff.hpp"
#include "game_option.hpp"
#include "lattice_fast.hpp"
#include "swing.hpp"
#include "shortfall.hpp"
#include "bs_bridge.hpp"
#include "polyhedral.hpp"
#include "txcost.hpp"
