#pragma once

#include "kfc/baselines.hpp"
#include "kfc/embedding_store.hpp"
#include "kfc/error.hpp"
#include "kfc/exact_solvers.hpp"
#include "kfc/greedy_solver.hpp"
#include "kfc/harness.hpp"
#include "kfc/json_io.hpp"
#include "kfc/narrative_threader.hpp"
#include "kfc/parallel.hpp"
#include "kfc/scoring.hpp"
#include "kfc/selection.hpp"
