#pragma once

#include "sacon/poly.hpp"
#include "sacon/squarefree.hpp"
#include "sacon/interval.hpp"
#include "sacon/compiled.hpp"
#include "sacon/routing.hpp"
#include "sacon/perturb.hpp"
#include "sacon/solve.hpp"
#include "sacon/eigen.hpp"
#include "sacon/destination.hpp"
#include "sacon/connect.hpp"
#include "sacon/pipeline.hpp"
#include "sacon/cache.hpp"
