#pragma once

#include "seqmis/degree.hpp"
#include "seqmis/errors.hpp"
#include "seqmis/explore.hpp"
#include "seqmis/fairness.hpp"
#include "seqmis/geometric.hpp"
#include "seqmis/glauber.hpp"
#include "seqmis/graph.hpp"
#include "seqmis/hydro.hpp"
#include "seqmis/io.hpp"
#include "seqmis/ode.hpp"
#include "seqmis/rate.hpp"
#include "seqmis/rng.hpp"
