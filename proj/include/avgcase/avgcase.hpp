#pragma once

#include "avgcase/errors.hpp"
#include "avgcase/rng.hpp"
#include "avgcase/distributions.hpp"
#include "avgcase/matrix.hpp"
#include "avgcase/graph.hpp"
#include "avgcase/graph_models.hpp"
#include "avgcase/geometry.hpp"
#include "avgcase/parallel.hpp"
#include "avgcase/kernels.hpp"
#include "avgcase/stats.hpp"
#include "avgcase/plan.hpp"
#include "avgcase/pipelines.hpp"
#include "avgcase/verify.hpp"
