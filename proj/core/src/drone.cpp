#include "olpi/drone.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "olpi/encoding.hpp"
#include "olpi/serialization.hpp"

namespace olpi {

namespace {

std::array<double, 3> position_of(const DroneState& state, int drone) {
  const std::size_t base = static_cast<std::size_t>(drone) * 6;
  return {state[base], state[base + 1], state[base + 2]};
}

std::array<double, 3> velocity_of(const DroneState& state, int drone) {
  const std::size_t base = static_cast<std::size_t>(drone) * 6;
  return {state[base + 3], state[base + 4], state[base + 5]};
}

double norm3(const std::array<double, 3>& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

}  // namespace

DroneState DroneScenario::initial_state() const {
  DroneState x;
  x.reserve(static_cast<std::size_t>(state_dim()));
  for (int d = 0; d < num_drones; ++d) {
    const auto& p = initial_positions[static_cast<std::size_t>(d)];
    const auto& v = initial_velocities[static_cast<std::size_t>(d)];
    x.insert(x.end(), {p[0], p[1], p[2], v[0], v[1], v[2]});
  }
  return x;
}

DroneState double_integrator_step(const DroneState& state, const DroneControl& control, double dt) {
  if (state.size() != control.size() * 2) {
    throw ShapeError("double integrator: state must stack (p, v) per drone, control the accelerations");
  }
  const int m = static_cast<int>(control.size()) / 3;
  DroneState next(state.size());
  for (int d = 0; d < m; ++d) {
    const std::size_t sb = static_cast<std::size_t>(d) * 6;
    const std::size_t cb = static_cast<std::size_t>(d) * 3;
    for (int i = 0; i < 3; ++i) {
      const double p = state[sb + static_cast<std::size_t>(i)];
      const double v = state[sb + 3 + static_cast<std::size_t>(i)];
      const double a = control[cb + static_cast<std::size_t>(i)];
      next[sb + static_cast<std::size_t>(i)] = p + v * dt + 0.5 * a * dt * dt;
      next[sb + 3 + static_cast<std::size_t>(i)] = v + a * dt;
    }
  }
  return next;
}

double distance_to_box(const std::array<double, 3>& p, const BoxObstacle& box) {
  double outside_sq = 0.0;
  double max_inside = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    const double d = std::abs(p[static_cast<std::size_t>(i)] - box.center[static_cast<std::size_t>(i)]) -
                     box.half_extents[static_cast<std::size_t>(i)];
    if (d > 0.0) outside_sq += d * d;
    max_inside = std::max(max_inside, d);
  }
  if (outside_sq > 0.0) return std::sqrt(outside_sq);
  return max_inside;  // negative depth inside the box
}

double distance_to_sphere(const std::array<double, 3>& p, const SphereObstacle& sphere) {
  const std::array<double, 3> d{p[0] - sphere.center[0], p[1] - sphere.center[1], p[2] - sphere.center[2]};
  return norm3(d) - sphere.radius;
}

double repulsion_barrier(double distance, double gain, double influence_radius, double floor) {
  if (distance >= influence_radius) return 0.0;
  const double d = std::max(distance, floor);
  const double diff = 1.0 / d - 1.0 / influence_radius;
  return 0.5 * gain * diff * diff;
}

double drone_stage_cost(const DroneScenario& scenario, int /*k*/, const DroneState& state,
                        const DroneControl& control) {
  if (static_cast<int>(state.size()) != scenario.state_dim() ||
      static_cast<int>(control.size()) != scenario.control_dim()) {
    throw ShapeError("drone stage cost: dimension mismatch");
  }
  const auto& w = scenario.weights;
  double total = 0.0;
  for (double a : control) total += w.control_effort * a * a;
  for (int d = 0; d < scenario.num_drones; ++d) {
    const auto p = position_of(state, d);
    for (const auto& box : scenario.boxes) {
      total += repulsion_barrier(distance_to_box(p, box), w.repulsion_gain, w.influence_radius, w.distance_floor);
    }
    for (const auto& sphere : scenario.spheres) {
      total += repulsion_barrier(distance_to_sphere(p, sphere), w.repulsion_gain, w.influence_radius,
                                 w.distance_floor);
    }
  }
  for (int i = 0; i < scenario.num_drones; ++i) {
    const auto pi = position_of(state, i);
    for (int j = i + 1; j < scenario.num_drones; ++j) {
      const auto pj = position_of(state, j);
      const std::array<double, 3> diff{pi[0] - pj[0], pi[1] - pj[1], pi[2] - pj[2]};
      total += repulsion_barrier(norm3(diff), w.separation_gain, w.separation_threshold, w.distance_floor);
    }
  }
  return total;
}

double drone_terminal_cost(const DroneScenario& scenario, const DroneState& state) {
  if (static_cast<int>(state.size()) != scenario.state_dim()) {
    throw ShapeError("drone terminal cost: dimension mismatch");
  }
  const auto& w = scenario.weights;
  double total = 0.0;
  for (int d = 0; d < scenario.num_drones; ++d) {
    const auto p = position_of(state, d);
    const auto v = velocity_of(state, d);
    const auto& goal = scenario.goals[static_cast<std::size_t>(d)].position;
    for (int i = 0; i < 3; ++i) {
      const double dp = p[static_cast<std::size_t>(i)] - goal[static_cast<std::size_t>(i)];
      total += w.terminal_position * dp * dp;
      total += w.terminal_velocity * v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    }
  }
  return total;
}

ControlProblem<DroneState, DroneControl> make_drone_problem(const DroneScenario& scenario) {
  ControlProblem<DroneState, DroneControl> p;
  p.horizon = scenario.horizon;
  const DroneScenario sc = scenario;
  const double dt = scenario.dt;
  const int cdim = scenario.control_dim();

  p.control_lower.reserve(static_cast<std::size_t>(cdim));
  p.control_upper.reserve(static_cast<std::size_t>(cdim));
  for (int d = 0; d < scenario.num_drones; ++d) {
    for (int i = 0; i < 3; ++i) {
      p.control_lower.push_back(scenario.accel_lower[static_cast<std::size_t>(i)]);
      p.control_upper.push_back(scenario.accel_upper[static_cast<std::size_t>(i)]);
    }
  }
  const std::vector<double> lo = p.control_lower;
  const std::vector<double> hi = p.control_upper;

  p.dynamics = [dt](int, const DroneState& x, const DroneControl& u) { return double_integrator_step(x, u, dt); };
  p.stage_cost = [sc](int k, const DroneState& x, const DroneControl& u) { return drone_stage_cost(sc, k, x, u); };
  p.terminal_cost = [sc](const DroneState& x) { return drone_terminal_cost(sc, x); };
  p.control_feasible = [lo, hi, cdim](int, const DroneState&, const DroneControl& u) {
    if (static_cast<int>(u.size()) != cdim) return false;
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (u[i] < lo[i] || u[i] > hi[i]) return false;
    }
    return true;
  };
  p.encode_state = [](const DroneState& x) { return encode_doubles(x); };
  p.encode_control = [](const DroneControl& u) { return encode_doubles(u); };
  return p;
}

Policy<DroneState, DroneControl> heuristic_base_policy(const DroneScenario& scenario) {
  Policy<DroneState, DroneControl> policy;
  const DroneScenario sc = scenario;
  auto law = [sc](const DroneState& x) -> DroneControl {
    DroneControl u(static_cast<std::size_t>(sc.control_dim()));
    for (int d = 0; d < sc.num_drones; ++d) {
      const auto p = position_of(x, d);
      const auto v = velocity_of(x, d);
      const auto& goal = sc.goals[static_cast<std::size_t>(d)].position;
      for (int i = 0; i < 3; ++i) {
        const double a = sc.base_gains.kp * (goal[static_cast<std::size_t>(i)] - p[static_cast<std::size_t>(i)]) -
                         sc.base_gains.kd * v[static_cast<std::size_t>(i)];
        u[static_cast<std::size_t>(d) * 3 + static_cast<std::size_t>(i)] =
            std::min(sc.accel_upper[static_cast<std::size_t>(i)],
                     std::max(sc.accel_lower[static_cast<std::size_t>(i)], a));
      }
    }
    return u;
  };
  for (int k = 0; k < scenario.horizon; ++k) policy.stage_maps.push_back(law);
  return policy;
}

std::vector<int> sequential_agent_schedule(int num_drones, AgentOrder order, std::uint64_t seed) {
  if (num_drones < 1) throw ConfigError("sequential agent schedule: need at least one drone");
  const int n = 3 * num_drones;
  if (order == AgentOrder::fixed) {
    std::vector<int> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i;
    return out;
  }
  Rng rng(seed);
  return random_permutation(n, rng);
}

namespace {

std::array<double, 3> array3(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("scenario field '" + field + "' must be a 3-array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

DroneScenario scenario_from_json(const nlohmann::json& j) {
  DroneScenario sc;
  try {
    sc.name = j.value("name", "scenario");
    sc.num_drones = j.at("num_drones").get<int>();
    sc.horizon = j.at("horizon").get<int>();
    sc.dt = j.at("dt").get<double>();
    sc.accel_lower = array3(j.at("accel_bounds").at("lower"), "accel_bounds.lower");
    sc.accel_upper = array3(j.at("accel_bounds").at("upper"), "accel_bounds.upper");
    for (const auto& b : j.at("obstacles").value("boxes", nlohmann::json::array())) {
      BoxObstacle box;
      box.center = array3(b.at("center"), "obstacles.boxes.center");
      box.half_extents = array3(b.at("half_extents"), "obstacles.boxes.half_extents");
      sc.boxes.push_back(box);
    }
    for (const auto& s : j.at("obstacles").value("spheres", nlohmann::json::array())) {
      SphereObstacle sphere;
      sphere.center = array3(s.at("center"), "obstacles.spheres.center");
      sphere.radius = s.at("radius").get<double>();
      sc.spheres.push_back(sphere);
    }
    for (const auto& d : j.at("drones")) {
      sc.initial_positions.push_back(array3(d.at("initial_position"), "drones.initial_position"));
      sc.initial_velocities.push_back(array3(d.at("initial_velocity"), "drones.initial_velocity"));
      DroneGoal goal;
      goal.position = array3(d.at("goal_position"), "drones.goal_position");
      goal.box_center = array3(d.at("goal_box_center"), "drones.goal_box_center");
      goal.box_half_extents = array3(d.at("goal_box_half_extents"), "drones.goal_box_half_extents");
      sc.goals.push_back(goal);
    }
    const auto& w = j.at("cost_weights");
    sc.weights.control_effort = w.at("control_effort").get<double>();
    sc.weights.repulsion_gain = w.at("repulsion_gain").get<double>();
    sc.weights.influence_radius = w.at("influence_radius").get<double>();
    sc.weights.terminal_position = w.at("terminal_position").get<double>();
    sc.weights.terminal_velocity = w.at("terminal_velocity").get<double>();
    sc.weights.separation_gain = w.value("separation_gain", 0.0);
    sc.weights.separation_threshold = w.value("separation_threshold", 0.0);
    sc.weights.distance_floor = w.value("distance_floor", 1e-3);
    const auto& bp = j.at("base_policy");
    sc.base_gains.kp = bp.at("kp").get<double>();
    sc.base_gains.kd = bp.at("kd").get<double>();
    const auto& sp = j.at("sampling");
    if (sp.at("states_per_stage").is_array()) {
      sc.sampling.samples_per_stage = sp.at("states_per_stage").get<std::vector<int>>();
    } else {
      sc.sampling.samples_per_stage = {sp.at("states_per_stage").get<int>()};
    }
    sc.sampling.control_candidates = sp.at("control_candidates").get<int>();
    // position/velocity sigmas expand to the stacked 6m state layout
    const double pos_sigma = sp.at("position_sigma").get<double>();
    const double vel_sigma = sp.at("velocity_sigma").get<double>();
    sc.sampling.state_sigma.clear();
    for (int d = 0; d < sc.num_drones; ++d) {
      for (int i = 0; i < 3; ++i) sc.sampling.state_sigma.push_back(pos_sigma);
      for (int i = 0; i < 3; ++i) sc.sampling.state_sigma.push_back(vel_sigma);
    }
    sc.sampling.control_sigma = {sp.at("control_sigma").get<double>()};
    const auto& ma = j.at("multiagent");
    if (ma.at("resolution").is_array()) {
      sc.multiagent.resolutions = ma.at("resolution").get<std::vector<double>>();
    } else {
      sc.multiagent.resolutions = {ma.at("resolution").get<double>()};
    }
    sc.multiagent.offsets = ma.at("offsets").get<std::vector<int>>();
    const auto& tr = j.at("training");
    sc.training.hidden = tr.at("hidden").get<int>();
    sc.training.epochs = tr.at("epochs").get<int>();
    sc.training.batch = tr.at("batch").get<int>();
    sc.training.learning_rate = tr.at("learning_rate").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }

  if (sc.num_drones < 1) throw ConfigError("scenario field 'num_drones' must be at least 1");
  if (sc.horizon < 1) throw ConfigError("scenario field 'horizon' must be at least 1");
  if (!(sc.dt > 0.0)) throw ConfigError("scenario field 'dt' must be positive");
  for (int i = 0; i < 3; ++i) {
    if (!(sc.accel_lower[static_cast<std::size_t>(i)] < sc.accel_upper[static_cast<std::size_t>(i)])) {
      throw ConfigError("scenario field 'accel_bounds': lower must be below upper on every axis");
    }
  }
  if (static_cast<int>(sc.initial_positions.size()) != sc.num_drones ||
      static_cast<int>(sc.goals.size()) != sc.num_drones) {
    throw ConfigError("scenario field 'drones' must list exactly num_drones entries");
  }
  for (int d = 0; d < sc.num_drones; ++d) {
    const auto& p = sc.initial_positions[static_cast<std::size_t>(d)];
    for (const auto& box : sc.boxes) {
      if (distance_to_box(p, box) <= 0.0) {
        throw ConfigError("scenario field 'drones[" + std::to_string(d) + "].initial_position' is inside a box obstacle");
      }
    }
    for (const auto& s : sc.spheres) {
      if (distance_to_sphere(p, s) <= 0.0) {
        throw ConfigError("scenario field 'drones[" + std::to_string(d) + "].initial_position' is inside a sphere obstacle");
      }
    }
  }
  sc.multiagent.validate();
  return sc;
}

nlohmann::json scenario_to_json(const DroneScenario& sc) {
  nlohmann::json boxes = nlohmann::json::array();
  for (const auto& b : sc.boxes) {
    boxes.push_back({{"center", b.center}, {"half_extents", b.half_extents}});
  }
  nlohmann::json spheres = nlohmann::json::array();
  for (const auto& s : sc.spheres) {
    spheres.push_back({{"center", s.center}, {"radius", s.radius}});
  }
  nlohmann::json drones = nlohmann::json::array();
  for (int d = 0; d < sc.num_drones; ++d) {
    const auto& goal = sc.goals[static_cast<std::size_t>(d)];
    drones.push_back({{"initial_position", sc.initial_positions[static_cast<std::size_t>(d)]},
                      {"initial_velocity", sc.initial_velocities[static_cast<std::size_t>(d)]},
                      {"goal_position", goal.position},
                      {"goal_box_center", goal.box_center},
                      {"goal_box_half_extents", goal.box_half_extents}});
  }
  return nlohmann::json{
      {"name", sc.name},
      {"num_drones", sc.num_drones},
      {"horizon", sc.horizon},
      {"dt", sc.dt},
      {"accel_bounds", {{"lower", sc.accel_lower}, {"upper", sc.accel_upper}}},
      {"obstacles", {{"boxes", boxes}, {"spheres", spheres}}},
      {"drones", drones},
      {"cost_weights",
       {{"control_effort", sc.weights.control_effort},
        {"repulsion_gain", sc.weights.repulsion_gain},
        {"influence_radius", sc.weights.influence_radius},
        {"terminal_position", sc.weights.terminal_position},
        {"terminal_velocity", sc.weights.terminal_velocity},
        {"separation_gain", sc.weights.separation_gain},
        {"separation_threshold", sc.weights.separation_threshold},
        {"distance_floor", sc.weights.distance_floor}}},
      {"base_policy", {{"kp", sc.base_gains.kp}, {"kd", sc.base_gains.kd}}},
      {"sampling",
       {{"states_per_stage", sc.sampling.samples_per_stage.size() == 1 ? nlohmann::json(sc.sampling.samples_per_stage[0])
                                                                       : nlohmann::json(sc.sampling.samples_per_stage)},
        {"control_candidates", sc.sampling.control_candidates},
        {"position_sigma", sc.sampling.state_sigma.empty() ? 0.0 : sc.sampling.state_sigma[0]},
        {"velocity_sigma", sc.sampling.state_sigma.size() >= 4 ? sc.sampling.state_sigma[3] : 0.0},
        {"control_sigma", sc.sampling.control_sigma.empty() ? 0.0 : sc.sampling.control_sigma[0]}}},
      {"multiagent",
       {{"resolution", sc.multiagent.resolutions.size() == 1 ? nlohmann::json(sc.multiagent.resolutions[0])
                                                             : nlohmann::json(sc.multiagent.resolutions)},
        {"offsets", sc.multiagent.offsets}}},
      {"training",
       {{"hidden", sc.training.hidden},
        {"epochs", sc.training.epochs},
        {"batch", sc.training.batch},
        {"learning_rate", sc.training.learning_rate}}}};
}

DroneScenario build_scenario(const std::filesystem::path& spec_file) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(spec_file));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario file " + spec_file.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

std::string drone_trajectory_csv(const DroneScenario& scenario,
                                 const Trajectory<DroneState, DroneControl>& traj, int drone) {
  std::string out = "k,t,px,py,pz,vx,vy,vz,ax,ay,az\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const auto& x = traj.states[k];
    const std::size_t sb = static_cast<std::size_t>(drone) * 6;
    out += std::to_string(k);
    out += ',';
    out += format_double(static_cast<double>(k) * scenario.dt);
    for (int i = 0; i < 6; ++i) {
      out += ',';
      out += format_double(x[sb + static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < 3; ++i) {
      out += ',';
      if (k < traj.controls.size()) {
        out += format_double(traj.controls[k][static_cast<std::size_t>(drone) * 3 + static_cast<std::size_t>(i)]);
      } else {
        out += format_double(0.0);
      }
    }
    out += '\n';
  }
  return out;
}

bool reached_goal_box(const DroneScenario& scenario, const DroneState& terminal, int drone) {
  const auto p = position_of(terminal, drone);
  const auto& goal = scenario.goals[static_cast<std::size_t>(drone)];
  for (int i = 0; i < 3; ++i) {
    if (std::abs(p[static_cast<std::size_t>(i)] - goal.box_center[static_cast<std::size_t>(i)]) >
        goal.box_half_extents[static_cast<std::size_t>(i)]) {
      return false;
    }
  }
  return true;
}

}  // namespace olpi
