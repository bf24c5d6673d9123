#pragma once

#include "expgraph/apriori.hpp"
#include "expgraph/degree.hpp"
#include "expgraph/existence.hpp"
#include "expgraph/graph.hpp"
#include "expgraph/hypothesis.hpp"
#include "expgraph/io.hpp"
#include "expgraph/nonlinearity.hpp"
#include "expgraph/reduction.hpp"
#include "expgraph/solver.hpp"

namespace expgraph {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace expgraph
