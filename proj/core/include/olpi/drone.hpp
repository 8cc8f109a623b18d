#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "olpi/online_pi.hpp"
#include "olpi/problem.hpp"
#include "olpi/residual.hpp"

namespace olpi {

// Real-vector state/control aliases for the drone domain: the state stacks
// (position, velocity) per drone into a 6m-vector, the control stacks the
// per-drone accelerations into a 3m-vector.
using DroneState = std::vector<double>;
using DroneControl = std::vector<double>;

struct BoxObstacle {
  std::array<double, 3> center{};
  std::array<double, 3> half_extents{};
};

struct SphereObstacle {
  std::array<double, 3> center{};
  double radius = 0.0;
};

struct DroneGoal {
  std::array<double, 3> position{};          // goal state position (velocity 0)
  std::array<double, 3> box_center{};        // goal region box
  std::array<double, 3> box_half_extents{};
};

struct DroneCostWeights {
  double control_effort = 0.0;       // w_u
  double repulsion_gain = 0.0;       // eta
  double influence_radius = 0.0;     // d_0
  double terminal_position = 0.0;    // w_p
  double terminal_velocity = 0.0;    // w_v
  double separation_gain = 0.0;      // pairwise barrier gain (multi-drone)
  double separation_threshold = 0.0; // pairwise influence distance
  double distance_floor = 1e-3;      // clamp for distances at or inside surfaces
};

struct BasePolicyGains {
  double kp = 0.6;
  double kd = 1.6;
};

struct DroneScenario {
  std::string name;
  int num_drones = 1;
  int horizon = 40;
  double dt = 0.25;
  std::array<double, 3> accel_lower{};
  std::array<double, 3> accel_upper{};
  std::vector<BoxObstacle> boxes;
  std::vector<SphereObstacle> spheres;
  std::vector<std::array<double, 3>> initial_positions;   // one per drone
  std::vector<std::array<double, 3>> initial_velocities;  // one per drone
  std::vector<DroneGoal> goals;                           // one per drone
  DroneCostWeights weights;
  BasePolicyGains base_gains;
  SamplingParams sampling;
  MultiagentConfig multiagent;
  TrainingConfig training;

  int state_dim() const { return 6 * num_drones; }
  int control_dim() const { return 3 * num_drones; }
  int obstacle_count() const { return static_cast<int>(boxes.size() + spheres.size()); }
  DroneState initial_state() const;
};

// Exact kinematics over one interval: p' = p + v dt + a dt^2 / 2, v' = v + a dt,
// applied per drone.
DroneState double_integrator_step(const DroneState& state, const DroneControl& control, double dt);

// Distance from a point to the obstacle surface (negative inside).
double distance_to_box(const std::array<double, 3>& p, const BoxObstacle& box);
double distance_to_sphere(const std::array<double, 3>& p, const SphereObstacle& sphere);

// Barrier of the potential-field form: eta/2 * (1/d - 1/d0)^2 for d < d0 and 0
// otherwise, with d clamped to the floor so the value stays finite inside
// obstacles.
double repulsion_barrier(double distance, double gain, double influence_radius, double floor);

// w_u ||u||^2 + obstacle repulsion per drone + pairwise separation barriers.
double drone_stage_cost(const DroneScenario& scenario, int k, const DroneState& state,
                        const DroneControl& control);

// Sum over drones of w_p ||p - p_goal||^2 + w_v ||v||^2.
double drone_terminal_cost(const DroneScenario& scenario, const DroneState& state);

ControlProblem<DroneState, DroneControl> make_drone_problem(const DroneScenario& scenario);

// Saturated proportional-derivative law toward each drone's goal:
// a = clamp(kp (p_goal - p) - kd v). Stage-independent and feasible by
// construction; stands in for a learned initial policy.
Policy<DroneState, DroneControl> heuristic_base_policy(const DroneScenario& scenario);

// Coordinate computation order for m drones: drone-major (drone 0's x,y,z,
// then drone 1's, ...) or a seeded permutation of the 3m indices.
enum class AgentOrder { fixed, permuted };
std::vector<int> sequential_agent_schedule(int num_drones, AgentOrder order, std::uint64_t seed);

// Scenario JSON: obstacles, goals, bounds, weights, horizon/dt, sampling,
// multiagent, and training parameter blocks. Validation errors name the
// offending field.
DroneScenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const DroneScenario& scenario);
DroneScenario build_scenario(const std::filesystem::path& spec_file);

// Per-drone trajectory CSV: k, t, px, py, pz, vx, vy, vz, ax, ay, az. The
// terminal row carries no control; its acceleration columns repeat zero.
std::string drone_trajectory_csv(const DroneScenario& scenario,
                                 const Trajectory<DroneState, DroneControl>& traj, int drone);

// True if the drone's final position lies inside its goal box (diagnostic
// only; not part of the cost).
bool reached_goal_box(const DroneScenario& scenario, const DroneState& terminal, int drone);

}  // namespace olpi
