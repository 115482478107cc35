#pragma once

#include "rowmarket/numeric.hpp"
#include "rowmarket/random.hpp"
#include "rowmarket/distributions.hpp"
#include "rowmarket/mechanisms.hpp"
#include "rowmarket/strategy.hpp"
#include "rowmarket/expectation.hpp"
#include "rowmarket/pair_kernel.hpp"
#include "rowmarket/dynamics.hpp"
#include "rowmarket/experiments.hpp"
#include "rowmarket/config.hpp"
#include "rowmarket/cli.hpp"
