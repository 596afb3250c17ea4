#pragma once

#include "eepc/efficiency.hpp"
#include "eepc/errors.hpp"
#include "eepc/experiments.hpp"
#include "eepc/game.hpp"
#include "eepc/geometry.hpp"
#include "eepc/markov.hpp"
#include "eepc/repeated.hpp"
#include "eepc/root_finding.hpp"
#include "eepc/scenario.hpp"
#include "eepc/stochastic.hpp"
