#pragma once

#include "rotec/admissible_set.hpp"
#include "rotec/config.hpp"
#include "rotec/error.hpp"
#include "rotec/governor.hpp"
#include "rotec/io.hpp"
#include "rotec/linalg.hpp"
#include "rotec/lp.hpp"
#include "rotec/plant.hpp"
#include "rotec/rng.hpp"
#include "rotec/rotec_flow.hpp"
#include "rotec/scenario.hpp"
#include "rotec/scheduler.hpp"
#include "rotec/simulation.hpp"
