#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "olpi/drone.hpp"
#include "olpi/experiment.hpp"
#include "olpi/online_pi.hpp"

using namespace olpi;

namespace {

DroneScenario bundled(const std::string& name) {
  return build_scenario(find_config_file("scenarios/" + name));
}

DroneScenario strip_obstacles(DroneScenario sc) {
  sc.boxes.clear();
  sc.spheres.clear();
  return sc;
}

}  // namespace

TEST_CASE("double integrator closed forms") {
  SUBCASE("at rest with zero control the state is unchanged") {
    const DroneState x{1.0, 2.0, 3.0, 0.0, 0.0, 0.0};
    CHECK(double_integrator_step(x, {0.0, 0.0, 0.0}, 0.25) == x);
  }
  SUBCASE("quarter-second unit acceleration") {
    const auto next = double_integrator_step({0, 0, 0, 0, 0, 0}, {1.0, 0.0, 0.0}, 0.25);
    CHECK(next[0] == 0.03125);
    CHECK(next[3] == 0.25);
    CHECK(next[1] == 0.0);
  }
  SUBCASE("forty constant steps match the closed form exactly") {
    const double a = 0.7, dt = 0.25;
    DroneState x{0, 0, 0, 0, 0, 0};
    for (int k = 0; k < 40; ++k) x = double_integrator_step(x, {0.0, 0.0, a}, dt);
    const double T = 40 * dt;
    CHECK(x[2] == doctest::Approx(0.5 * a * T * T).epsilon(1e-14));
    CHECK(x[5] == doctest::Approx(a * T).epsilon(1e-14));
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS((void)double_integrator_step({0, 0, 0, 0}, {1.0}, 0.25), ShapeError);
  }
}

TEST_CASE("stage cost: zero control far from everything costs nothing") {
  auto sc = bundled("drone_single_1.json");
  DroneState far(6, 0.0);
  far[0] = -100.0;
  far[1] = -100.0;
  far[2] = 50.0;
  CHECK(drone_stage_cost(sc, 0, far, {0.0, 0.0, 0.0}) == 0.0);
  CHECK(drone_stage_cost(sc, 0, far, {1.0, -2.0, 0.5}) ==
        doctest::Approx(sc.weights.control_effort * (1.0 + 4.0 + 0.25)));
}

TEST_CASE("repulsion at half the influence radius matches the hand formula") {
  const double d0 = 1.5, eta = 2.0;
  const double d = d0 / 2.0;
  const double expected = 0.5 * eta * std::pow(1.0 / d - 1.0 / d0, 2.0);
  CHECK(repulsion_barrier(d, eta, d0, 1e-3) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(repulsion_barrier(d0, eta, d0, 1e-3) == 0.0);
  CHECK(repulsion_barrier(d0 + 1.0, eta, d0, 1e-3) == 0.0);
}

TEST_CASE("barrier vanishes quadratically at the influence boundary") {
  const double d0 = 1.5, eta = 2.0;
  for (double eps : {1e-3, 1e-4}) {
    const double v = repulsion_barrier(d0 - eps, eta, d0, 1e-6);
    // 1/d - 1/d0 ~ eps / d0^2, so the barrier is ~ eta eps^2 / (2 d0^4)
    const double bound = 2.0 * eta * eps * eps / (2.0 * std::pow(d0, 4.0));
    CHECK(v <= bound);
    CHECK(v > 0.0);
  }
}

TEST_CASE("inside an obstacle the cost is large but finite") {
  auto sc = bundled("drone_single_1.json");
  const auto& box = sc.boxes.front();
  DroneState inside{box.center[0], box.center[1], box.center[2], 0, 0, 0};
  const double c = drone_stage_cost(sc, 0, inside, {0, 0, 0});
  CHECK(std::isfinite(c));
  CHECK(c > 100.0);
}

TEST_CASE("single-drone stage cost has no separation term; multi-drone reduces to it") {
  auto multi = bundled("drone_multi_1.json");
  // two drones far apart and far from obstacles: only control effort remains
  DroneState x(12, 0.0);
  x[0] = -50;
  x[1] = -50;
  x[2] = 30;
  x[6] = 60;
  x[7] = 60;
  x[8] = 30;
  DroneControl u(6, 0.5);
  CHECK(drone_stage_cost(multi, 0, x, u) == doctest::Approx(multi.weights.control_effort * 6 * 0.25));

  // bring them within the separation threshold: the pairwise barrier appears
  DroneState close = x;
  close[6] = x[0] + 0.6;
  close[7] = x[1];
  close[8] = x[2];
  const double with_sep = drone_stage_cost(multi, 0, close, u);
  const double expect_sep = repulsion_barrier(0.6, multi.weights.separation_gain,
                                              multi.weights.separation_threshold, multi.weights.distance_floor);
  CHECK(with_sep == doctest::Approx(multi.weights.control_effort * 6 * 0.25 + expect_sep));
}

TEST_CASE("terminal cost is the goal-deviation quadratic") {
  auto sc = bundled("drone_single_1.json");
  DroneState at_goal{17.0, 17.0, 4.0, 0.0, 0.0, 0.0};
  CHECK(drone_terminal_cost(sc, at_goal) == 0.0);
  DroneState off = at_goal;
  off[0] += 1.0;
  CHECK(drone_terminal_cost(sc, off) == doctest::Approx(sc.weights.terminal_position));
  DroneState moving = at_goal;
  moving[4] = 2.0;
  CHECK(drone_terminal_cost(sc, moving) == doctest::Approx(sc.weights.terminal_velocity * 4.0));
}

TEST_CASE("terminal cost matches an independent per-axis recomputation") {
  auto sc = bundled("drone_multi_2.json");
  Rng rng(77);
  DroneState x(static_cast<std::size_t>(sc.state_dim()));
  for (double& v : x) v = rng.next_gaussian() * 5.0;
  double expected = 0.0;
  for (int d = 0; d < sc.num_drones; ++d) {
    for (int i = 0; i < 3; ++i) {
      const double dp = x[static_cast<std::size_t>(d * 6 + i)] - sc.goals[static_cast<std::size_t>(d)].position[static_cast<std::size_t>(i)];
      const double dv = x[static_cast<std::size_t>(d * 6 + 3 + i)];
      expected += sc.weights.terminal_position * dp * dp + sc.weights.terminal_velocity * dv * dv;
    }
  }
  CHECK(drone_terminal_cost(sc, x) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("stage cost is nonnegative on random states and controls") {
  auto sc = bundled("drone_multi_3.json");
  Rng rng(88);
  for (int trial = 0; trial < 50; ++trial) {
    DroneState x(static_cast<std::size_t>(sc.state_dim()));
    for (double& v : x) v = rng.next_gaussian() * 8.0;
    DroneControl u(static_cast<std::size_t>(sc.control_dim()));
    for (double& v : u) v = rng.next_gaussian();
    CHECK(drone_stage_cost(sc, 0, x, u) >= 0.0);
  }
}

TEST_CASE("distance helpers: boxes and spheres") {
  BoxObstacle box{{0, 0, 0}, {1, 2, 3}};
  CHECK(distance_to_box({3.0, 0.0, 0.0}, box) == doctest::Approx(2.0));
  CHECK(distance_to_box({0.0, 0.0, 0.0}, box) < 0.0);
  CHECK(distance_to_box({1.0, 2.0, 3.0}, box) == doctest::Approx(0.0));
  CHECK(distance_to_box({4.0, 6.0, 0.0}, box) == doctest::Approx(5.0));  // 3-4-5 corner
  SphereObstacle s{{1, 1, 1}, 2.0};
  CHECK(distance_to_sphere({1.0, 1.0, 4.0}, s) == doctest::Approx(1.0));
  CHECK(distance_to_sphere({1.0, 1.0, 1.0}, s) == doctest::Approx(-2.0));
}

TEST_CASE("base policy is zero at the goal at rest and always within bounds") {
  auto sc = bundled("drone_single_1.json");
  const auto pi = heuristic_base_policy(sc);
  DroneState at_goal{17.0, 17.0, 4.0, 0.0, 0.0, 0.0};
  CHECK(pi.stage_maps[0](at_goal) == DroneControl{0.0, 0.0, 0.0});

  const auto problem = make_drone_problem(sc);
  const auto traj = rollout_policy(problem, pi, sc.initial_state());
  CHECK(is_feasible(problem, traj).clean);
  CHECK(std::isfinite(trajectory_cost(problem, traj)));
}

TEST_CASE("base policy reaches the goal box in the obstacle-free world") {
  for (const auto* name : {"drone_single_1.json", "drone_single_2.json", "drone_single_3.json"}) {
    auto sc = strip_obstacles(bundled(name));
    const auto problem = make_drone_problem(sc);
    const auto traj = rollout_policy(problem, heuristic_base_policy(sc), sc.initial_state());
    CHECK(reached_goal_box(sc, traj.states.back(), 0));
  }
}

TEST_CASE("base policy rollout cost is finite in all bundled scenarios") {
  for (const auto* name : {"drone_single_1.json", "drone_single_2.json", "drone_single_3.json",
                           "drone_multi_1.json", "drone_multi_2.json", "drone_multi_3.json"}) {
    auto sc = bundled(name);
    const auto problem = make_drone_problem(sc);
    const auto traj = rollout_policy(problem, heuristic_base_policy(sc), sc.initial_state());
    CHECK(std::isfinite(trajectory_cost(problem, traj)));
  }
}

TEST_CASE("bundled scenarios carry the documented obstacle and drone counts") {
  CHECK(bundled("drone_single_1.json").obstacle_count() == 12);
  CHECK(bundled("drone_single_2.json").obstacle_count() == 16);
  CHECK(bundled("drone_single_3.json").obstacle_count() == 24);
  const auto m1 = bundled("drone_multi_1.json");
  CHECK(m1.num_drones == 2);
  CHECK(m1.obstacle_count() == 12);
  CHECK(m1.goals.size() == 2);
  const auto m3 = bundled("drone_multi_3.json");
  CHECK(m3.num_drones == 4);
  CHECK(m3.obstacle_count() == 24);
  CHECK(m3.goals.size() == 4);
}

TEST_CASE("scenario schema errors name the offending field") {
  auto j = scenario_to_json(bundled("drone_single_1.json"));
  j["dt"] = 0.0;
  try {
    (void)scenario_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("dt") != std::string::npos);
  }

  auto j2 = scenario_to_json(bundled("drone_single_1.json"));
  j2["drones"][0]["initial_position"] = j2["obstacles"]["boxes"][0]["center"];
  CHECK_THROWS_AS((void)scenario_from_json(j2), ConfigError);
}

TEST_CASE("scenario JSON round-trips") {
  const auto sc = bundled("drone_multi_2.json");
  const auto back = scenario_from_json(scenario_to_json(sc));
  CHECK(back.num_drones == sc.num_drones);
  CHECK(back.obstacle_count() == sc.obstacle_count());
  CHECK(back.weights.repulsion_gain == sc.weights.repulsion_gain);
  CHECK(back.multiagent.offsets == sc.multiagent.offsets);
  CHECK(back.initial_positions == sc.initial_positions);
}

TEST_CASE("sequential agent schedule") {
  CHECK(sequential_agent_schedule(1, AgentOrder::fixed, 0) == std::vector<int>{0, 1, 2});
  CHECK(sequential_agent_schedule(2, AgentOrder::fixed, 0) == std::vector<int>{0, 1, 2, 3, 4, 5});
  const auto a = sequential_agent_schedule(3, AgentOrder::permuted, 9);
  const auto b = sequential_agent_schedule(3, AgentOrder::permuted, 9);
  CHECK(a == b);
  CHECK(a.size() == 9);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 9; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("per-stage candidate count never exceeds |Z| * 3m") {
  auto sc = bundled("drone_single_1.json");
  sc.horizon = 10;  // shorter run for the unit suite
  sc.training.epochs = 10;
  const auto problem = make_drone_problem(sc);
  const auto pi0 = heuristic_base_policy(sc);
  const auto gen = make_residual_generator(problem, sc.sampling, sc.training);
  auto builder = multiagent_builder<DroneState>(sc.multiagent);
  OnlinePiOptions opt;
  opt.max_iters = 2;
  opt.tie_tol = 1e-9;
  opt.seed = 4;
  const auto history = run_online_pi(problem, sc.initial_state(), pi0, gen, builder, opt);
  const int limit = static_cast<int>(sc.multiagent.offsets.size()) * 3 * sc.num_drones;
  for (const auto& e : history.entries) {
    for (int c : e.stage_candidates) {
      CHECK(c <= limit);
      CHECK(c >= 3 * sc.num_drones);  // at least the zero offset per coordinate
    }
  }
}

TEST_CASE("drone trajectory CSV has one row per stage plus the terminal row") {
  auto sc = bundled("drone_single_1.json");
  const auto problem = make_drone_problem(sc);
  const auto traj = rollout_policy(problem, heuristic_base_policy(sc), sc.initial_state());
  const auto csv = drone_trajectory_csv(sc, traj, 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == sc.horizon + 2);  // header + N+1 rows
  CHECK(csv.rfind("k,t,px,py,pz,vx,vy,vz,ax,ay,az\n", 0) == 0);
}
