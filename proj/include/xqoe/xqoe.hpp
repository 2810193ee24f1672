#pragma once

#include "allocation.hpp"
#include "attention.hpp"
#include "contract.hpp"
#include "core_types.hpp"
#include "dataset.hpp"
#include "experiment.hpp"
#include "mimo_kpi.hpp"
#include "montecarlo.hpp"
#include "qoe.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "special.hpp"
