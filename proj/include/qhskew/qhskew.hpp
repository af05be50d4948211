#pragma once

#include "qhskew/acceptance.hpp"
#include "qhskew/config.hpp"
#include "qhskew/empirical_law.hpp"
#include "qhskew/experiments.hpp"
#include "qhskew/fiber_stats.hpp"
#include "qhskew/fit.hpp"
#include "qhskew/frame.hpp"
#include "qhskew/fuchsian.hpp"
#include "qhskew/io.hpp"
#include "qhskew/observable.hpp"
#include "qhskew/parallel.hpp"
#include "qhskew/rng.hpp"
#include "qhskew/scenery.hpp"
#include "qhskew/selftest.hpp"
#include "qhskew/skew.hpp"
#include "qhskew/stats.hpp"
#include "qhskew/torus.hpp"
