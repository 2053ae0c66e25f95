#pragma once

#include "dynstack/error.hpp"
#include "dynstack/experiment.hpp"
#include "dynstack/fixtures.hpp"
#include "dynstack/graph.hpp"
#include "dynstack/level0.hpp"
#include "dynstack/logistic.hpp"
#include "dynstack/metrics.hpp"
#include "dynstack/model_io.hpp"
#include "dynstack/parallel.hpp"
#include "dynstack/naive_bayes.hpp"
#include "dynstack/random.hpp"
#include "dynstack/relational.hpp"
#include "dynstack/simulation.hpp"
#include "dynstack/spline.hpp"
#include "dynstack/stacking.hpp"
