#pragma once

// Umbrella header.

#include "hyperoffload/error.hpp"
#include "hyperoffload/experiment.hpp"
#include "hyperoffload/hyperprofile.hpp"
#include "hyperoffload/kdtree.hpp"
#include "hyperoffload/knn.hpp"
#include "hyperoffload/model_io.hpp"
#include "hyperoffload/regression.hpp"
#include "hyperoffload/traces.hpp"
