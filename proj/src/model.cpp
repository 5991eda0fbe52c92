#include "compsyn/model.hpp"

#include <cmath>
#include <stdexcept>

namespace compsyn {

void SubsystemModel::validate() const {
  const std::size_t dx = state_dims();
  const std::size_t dw = internal_dims();
  if (dx == 0) throw std::invalid_argument("model: empty state");
  if (ext_inputs.empty()) throw std::invalid_argument("model: empty external input set");
  for (const auto& [lo, hi] : state_box)
    if (!(lo < hi)) throw std::invalid_argument("model: state box side must be positive");
  for (const auto& [lo, hi] : internal_box)
    if (!(lo < hi)) throw std::invalid_argument("model: internal box side must be positive");
  if (a.size() != ext_inputs.size())
    throw std::invalid_argument("model: a must have one row per external input");
  for (const auto& row : a)
    if (row.size() != dx) throw std::invalid_argument("model: a row dimension mismatch");
  if (b.size() != dx || c.size() != dx || r.size() != dx)
    throw std::invalid_argument("model: b/c/r dimension mismatch");
  if (d_gain.size() != dx) throw std::invalid_argument("model: D row count mismatch");
  for (const auto& row : d_gain)
    if (row.size() != dw) throw std::invalid_argument("model: D column count mismatch");
  for (double rd : r)
    if (!(rd >= 0.0)) throw std::invalid_argument("model: noise scale must be >= 0");
}

void step_subsystem(const SubsystemModel& m, std::span<const double> x, std::size_t u_idx,
                    std::span<const double> w, std::span<const double> z,
                    std::span<double> out) {
  const std::size_t dx = m.state_dims();
  if (x.size() != dx || z.size() != dx || out.size() != dx)
    throw std::invalid_argument("step_subsystem: state dimension mismatch");
  if (w.size() != m.internal_dims())
    throw std::invalid_argument("step_subsystem: internal input dimension mismatch");
  if (u_idx >= m.n_inputs()) throw std::invalid_argument("step_subsystem: input index out of range");
  const double uval = m.ext_inputs[u_idx];
  const auto& au = m.a[u_idx];
  for (std::size_t d = 0; d < dx; ++d) {
    double v = au[d] * x[d] + m.b[d] * uval + m.c[d] + m.r[d] * z[d];
    const auto& Dd = m.d_gain[d];
    for (std::size_t j = 0; j < Dd.size(); ++j) v += Dd[j] * w[j];
    out[d] = v;
  }
}

void NetworkModel::validate() const {
  if (subsystems.empty()) throw std::invalid_argument("network: empty");
  if (wiring.size() != subsystems.size())
    throw std::invalid_argument("network: wiring size mismatch");
  for (std::size_t i = 0; i < subsystems.size(); ++i) {
    subsystems[i].validate();
    if (wiring[i].size() != subsystems[i].internal_dims())
      throw std::invalid_argument("network: wiring arity mismatch for subsystem " +
                                  std::to_string(i));
    for (const auto& e : wiring[i]) {
      if (e.source < 0 || static_cast<std::size_t>(e.source) >= subsystems.size())
        throw std::invalid_argument("network: wiring source out of range");
      if (e.component < 0 ||
          static_cast<std::size_t>(e.component) >= subsystems[e.source].state_dims())
        throw std::invalid_argument("network: wiring component out of range");
    }
  }
}

void step_network(const NetworkModel& net, std::span<const double> x,
                  std::span<const std::size_t> u_idx, std::span<const double> z,
                  std::span<double> out) {
  const std::size_t n = net.size();
  if (u_idx.size() != n) throw std::invalid_argument("step_network: input count mismatch");
  std::vector<std::size_t> offset(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offset[i + 1] = offset[i] + net.subsystems[i].state_dims();
  if (x.size() != offset[n] || z.size() != offset[n] || out.size() != offset[n])
    throw std::invalid_argument("step_network: state vector size mismatch");
  std::vector<double> w;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& wiring = net.wiring[i];
    w.resize(wiring.size());
    for (std::size_t j = 0; j < wiring.size(); ++j)
      w[j] = x[offset[wiring[j].source] + wiring[j].component];
    const std::size_t dx = net.subsystems[i].state_dims();
    step_subsystem(net.subsystems[i], x.subspan(offset[i], dx), u_idx[i], w,
                   z.subspan(offset[i], dx), out.subspan(offset[i], dx));
  }
}

NetworkModel build_room_network(int n) {
  if (n < 3) throw std::invalid_argument("build_room_network: need at least 3 rooms");
  const double psi = 0.001, beta = 0.4, gamma = 0.5;
  const double t_heater = 30.0, t_outside = -1.0, noise = 0.1;
  SubsystemModel m;
  m.state_box = {{17.0, 18.0}};
  m.internal_box = {{17.0, 18.0}, {17.0, 18.0}};
  m.ext_inputs = {1.1542, 1.1625, 1.1708, 1.1792, 1.1875, 1.1958};
  for (double u : m.ext_inputs) m.a.push_back({1.0 - 2.0 * psi - beta - gamma * u});
  m.b = {gamma * t_heater};
  m.d_gain = {{psi, psi}};
  m.c = {beta * t_outside};
  m.r = {noise};
  auto [hx, hw] = gaussian_kernel_lipschitz(m);
  m.lipschitz_x = hx;
  m.lipschitz_w = hw;

  NetworkModel net;
  net.subsystems.assign(n, m);
  net.wiring.resize(n);
  for (int i = 0; i < n; ++i)
    net.wiring[i] = {{(i + n - 1) % n, 0}, {(i + 1) % n, 0}};
  net.validate();
  return net;
}

NetworkModel build_traffic_network(int n) {
  if (n < 2) throw std::invalid_argument("build_traffic_network: need at least 2 cells");
  // per 18s period: flow fraction tau*nu/l = 0.45, exit ratio 0.5
  const double flow = (18.0 / 3600.0) * 45.0 / 0.5;
  const double exit_ratio = 0.5;
  SubsystemModel m;
  m.state_box = {{0.0, 20.0}};
  m.internal_box = {{0.0, 20.0}};
  m.ext_inputs = {0.0, 1.0};
  m.a = {{1.0 - flow - exit_ratio}, {1.0 - flow - exit_ratio}};
  m.b = {5.0};
  m.d_gain = {{flow}};
  m.c = {0.0};
  m.r = {1.7};
  auto [hx, hw] = gaussian_kernel_lipschitz(m);
  m.lipschitz_x = hx;
  m.lipschitz_w = hw;

  NetworkModel net;
  net.subsystems.assign(n, m);
  net.wiring.resize(n);
  for (int i = 0; i < n; ++i) net.wiring[i] = {{(i + n - 1) % n, 0}};
  net.validate();
  return net;
}

std::pair<double, double> gaussian_kernel_lipschitz(const SubsystemModel& m) {
  m.validate();
  const double k = std::sqrt(2.0 * M_PI * std::exp(1.0));
  double hx = 0.0, hw = 0.0;
  for (std::size_t d = 0; d < m.state_dims(); ++d) {
    if (!(m.r[d] > 0.0))
      throw std::invalid_argument("gaussian_kernel_lipschitz: needs positive noise scale");
    const double denom = m.r[d] * m.r[d] * k;
    double amax = 0.0;
    for (const auto& row : m.a) amax = std::max(amax, std::abs(row[d]));
    double dsum = 0.0;
    for (double v : m.d_gain[d]) dsum += std::abs(v);
    hx = std::max(hx, amax / denom);
    hw = std::max(hw, dsum / denom);
  }
  return {hx, hw};
}

}  // namespace compsyn
