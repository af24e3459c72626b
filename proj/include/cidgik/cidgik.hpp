#pragma once

#include "cidgik/benchmark.hpp"
#include "cidgik/conic_solver.hpp"
#include "cidgik/convex_iteration.hpp"
#include "cidgik/distance_graph.hpp"
#include "cidgik/errors.hpp"
#include "cidgik/kinematic_model.hpp"
#include "cidgik/problem_generator.hpp"
#include "cidgik/problem_io.hpp"
#include "cidgik/random.hpp"
#include "cidgik/sdp_relaxation.hpp"
#include "cidgik/statistics.hpp"
#include "cidgik/workspace.hpp"
