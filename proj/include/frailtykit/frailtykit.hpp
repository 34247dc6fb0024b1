#pragma once

#include "frailtykit/baseline.hpp"
#include "frailtykit/errors.hpp"
#include "frailtykit/fit.hpp"
#include "frailtykit/likelihood.hpp"
#include "frailtykit/matrix.hpp"
#include "frailtykit/monte_carlo.hpp"
#include "frailtykit/posterior.hpp"
#include "frailtykit/rng.hpp"
#include "frailtykit/sampler.hpp"
#include "frailtykit/simulation.hpp"
#include "frailtykit/summary.hpp"
#include "frailtykit/types.hpp"
#include "frailtykit/waic.hpp"
