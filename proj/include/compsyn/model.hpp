#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace compsyn {

/// One subsystem with affine dynamics disturbed by scaled standard gaussians:
///
///   x'[d] = a[u][d]*x[d] + b[d]*U[u] + sum_j D[d][j]*w[j] + c[d] + r[d]*z[d]
///
/// External inputs are a finite list of values U; internal inputs w live in a
/// box and are chosen by the interconnection (or an adversary in the
/// abstraction). The output map is the identity on the state.
struct SubsystemModel {
  std::vector<std::pair<double, double>> state_box;     // per state dimension
  std::vector<std::pair<double, double>> internal_box;  // per internal dimension
  std::vector<double> ext_inputs;                       // U values
  std::vector<std::vector<double>> a;                   // a[u][d]
  std::vector<double> b;                                // per d
  std::vector<std::vector<double>> d_gain;              // D[d][j]
  std::vector<double> c;                                // per d
  std::vector<double> r;                                // noise scale per d
  double lipschitz_x = 0.0;
  double lipschitz_w = 0.0;

  std::size_t state_dims() const { return state_box.size(); }
  std::size_t internal_dims() const { return internal_box.size(); }
  std::size_t n_inputs() const { return ext_inputs.size(); }

  void validate() const;  // throws std::invalid_argument on shape errors
};

/// one step of the subsystem dynamics with explicit noise z
void step_subsystem(const SubsystemModel& m, std::span<const double> x, std::size_t u_idx,
                    std::span<const double> w, std::span<const double> z,
                    std::span<double> out);

/// wiring entry: internal channel gets component `component` of subsystem
/// `source`'s output (outputs are identity, so a state component)
struct WiringEntry {
  int source = 0;
  int component = 0;
};

struct NetworkModel {
  std::vector<SubsystemModel> subsystems;
  std::vector<std::vector<WiringEntry>> wiring;  // wiring[i][j] feeds w_i[j]

  std::size_t size() const { return subsystems.size(); }
  void validate() const;
};

/// one synchronous network step; x, z, out are concatenated per-subsystem
/// blocks, u_idx one entry per subsystem. Internal inputs are taken from the
/// pre-step state.
void step_network(const NetworkModel& net, std::span<const double> x,
                  std::span<const std::size_t> u_idx, std::span<const double> z,
                  std::span<double> out);

/// circular room-temperature network (n >= 3 rooms)
NetworkModel build_room_network(int n);

/// ring road-traffic network (n >= 2 cells)
NetworkModel build_traffic_network(int n);

/// Closed-form Lipschitz bounds of the gaussian transition density of `m`
/// w.r.t. the state (first) and the internal input (second):
///   H_x = max_u |a(u)| / (r^2 sqrt(2*pi*e)),  H_w = ||D||_1 / (r^2 sqrt(2*pi*e))
/// taken as the max over state dimensions. Requires r > 0.
std::pair<double, double> gaussian_kernel_lipschitz(const SubsystemModel& m);

}  // namespace compsyn
