#include "olpi/graph_problem.hpp"

#include "olpi/encoding.hpp"

namespace olpi {

const GraphProblem::Arc& GraphProblem::arc(int id) const {
  for (const Arc& a : arcs) {
    if (a.id == id) return a;
  }
  throw Error("unknown arc id " + std::to_string(id));
}

ControlProblem<int, int> make_graph_control_problem(const GraphProblem& graph) {
  ControlProblem<int, int> p;
  p.horizon = graph.horizon;
  const GraphProblem g = graph;  // captured by value below

  p.dynamics = [g](int, const int&, const int& u) { return g.arc(u).to; };
  p.stage_cost = [g](int, const int&, const int& u) { return g.arc(u).cost; };
  p.terminal_cost = [g](const int& x) {
    for (const auto& [node, cost] : g.terminal_costs) {
      if (node == x) return cost;
    }
    throw Error("no terminal cost for node " + std::to_string(x));
  };
  p.enumerate_controls = [g](int k, const int& x) {
    std::vector<int> out;
    for (const auto& a : g.arcs) {
      if (a.stage == k && a.from == x) out.push_back(a.id);
    }
    return out;
  };
  p.control_feasible = [g](int k, const int& x, const int& u) {
    for (const auto& a : g.arcs) {
      if (a.id == u) return a.stage == k && a.from == x;
    }
    return false;
  };
  p.encode_state = [](const int& x) { return encode_int(x); };
  p.encode_control = [](const int& u) { return encode_int(u); };
  return p;
}

GraphProblem five_node_example() {
  // Nodes: 0 at stage 0; 1, 2 at stage 1; 3, 4 at stage 2.
  GraphProblem g;
  g.horizon = 2;
  g.arcs = {
      {0, 0, 0, 1, 5.0},   // first stage, upper branch
      {1, 0, 0, 2, 5.0},   // first stage, lower branch
      {2, 1, 1, 3, 15.0},  // only arc out of node 1
      {3, 1, 2, 4, 10.0},  // cheap arc out of node 2
      {4, 1, 2, 3, 25.0},  // expensive arc out of node 2
  };
  g.terminal_costs = {{3, 0.0}, {4, 0.0}};
  return g;
}

Policy<int, int> five_node_initial_policy() {
  Policy<int, int> pi;
  pi.stage_maps.push_back([](const int&) { return 0; });
  pi.stage_maps.push_back([](const int& x) { return x == 1 ? 2 : 3; });
  return pi;
}

Generator<int, int> five_node_inconsistent_generator() {
  Generator<int, int> gen;
  gen.stochastic = false;
  gen.generate = [](const Trajectory<int, int>& traj, Rng&) {
    const bool is_target = traj.controls.size() == 2 && traj.controls[0] == 1 && traj.controls[1] == 3;
    if (!is_target) return tabular_generator(traj);
    Policy<int, int> pi;
    const int u0 = traj.controls[0];
    pi.stage_maps.push_back([u0](const int&) { return u0; });
    pi.stage_maps.push_back([u1 = traj.controls[1]](const int& x) { return x == 2 ? 4 : u1; });
    return pi;
  };
  return gen;
}

}  // namespace olpi
