#pragma once

#include "coinlab/bba/bba.hpp"
#include "coinlab/coins/approx.hpp"
#include "coinlab/coins/direct.hpp"
#include "coinlab/coins/formulas.hpp"
#include "coinlab/experiments/bench.hpp"
#include "coinlab/experiments/coins.hpp"
#include "coinlab/experiments/fig2.hpp"
#include "coinlab/irs/code.hpp"
#include "coinlab/irs/select.hpp"
#include "coinlab/protocols/avss.hpp"
#include "coinlab/protocols/baa.hpp"
#include "coinlab/protocols/brb.hpp"
#include "coinlab/protocols/gather.hpp"
#include "coinlab/protocols/rsd.hpp"
#include "coinlab/sim/adversaries.hpp"
#include "coinlab/sim/simulation.hpp"
