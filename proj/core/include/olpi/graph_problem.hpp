#pragma once

#include <string>
#include <vector>

#include "olpi/generator.hpp"
#include "olpi/problem.hpp"

namespace olpi {

// Stage-layered graph problem: states are node ids, controls are arc ids.
// Each arc carries its stage cost; terminal nodes carry terminal costs.
// Small instances of this domain drive the unit tests and the bundled demo.
struct GraphProblem {
  struct Arc {
    int id = 0;
    int stage = 0;
    int from = 0;
    int to = 0;
    double cost = 0.0;
  };

  int horizon = 0;
  std::vector<Arc> arcs;
  std::vector<std::pair<int, double>> terminal_costs;  // (node, g_N)

  const Arc& arc(int id) const;
};

ControlProblem<int, int> make_graph_control_problem(const GraphProblem& graph);

// The bundled five-node example: two stages, initial node 0, two terminal
// nodes. DP optimum 15; the bundled initial policy costs 20.
GraphProblem five_node_example();

// Initial policy for the five-node example: arc 0 at node 0, arc 2 at node 1,
// arc 3 at node 2.
Policy<int, int> five_node_initial_policy();

// Deliberately inconsistent generator for the five-node example: on the
// trajectory through arcs (1, 3) it emits a policy that picks arc 4 at node 2
// instead of replaying arc 3; on every other trajectory it behaves like the
// tabular replay generator.
Generator<int, int> five_node_inconsistent_generator();

}  // namespace olpi
