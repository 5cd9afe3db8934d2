#include "fraktur/state.hpp"

#include <cmath>
#include <stdexcept>

namespace fraktur {

SpaceTimeState SpaceTimeState::zero(const FemSystem& fem, const TimeGrid& tg) {
  SpaceTimeState s;
  s.u.assign(tg.steps + 1, Vec::Zero(fem.n_vector()));
  s.phi.assign(tg.steps + 1, Vec::Zero(fem.n_scalar()));
  return s;
}

void SpaceTimeState::check_shape(const FemSystem& fem, const TimeGrid& tg) const {
  if (static_cast<int>(u.size()) != tg.steps + 1 || static_cast<int>(phi.size()) != tg.steps + 1)
    throw std::invalid_argument("state: wrong number of time nodes");
  for (const auto& v : u)
    if (v.size() != fem.n_vector()) throw std::invalid_argument("state: u size mismatch");
  for (const auto& v : phi)
    if (v.size() != fem.n_scalar()) throw std::invalid_argument("state: phi size mismatch");
}

bool SpaceTimeState::all_finite() const {
  for (const auto& v : u)
    if (!v.allFinite()) return false;
  for (const auto& v : phi)
    if (!v.allFinite()) return false;
  return true;
}

Control Control::zero(const FemSystem& fem, const TimeGrid& tg) {
  Control c;
  c.q.assign(tg.steps + 1, Vec::Zero(fem.n_gamma()));
  return c;
}

Control Control::constant_in_time(const FemSystem& fem, const TimeGrid& tg, const Vec& profile) {
  if (profile.size() != fem.n_gamma())
    throw std::invalid_argument("control: profile size mismatch");
  Control c;
  c.q.assign(tg.steps + 1, profile);
  return c;
}

void Control::check_shape(const FemSystem& fem, const TimeGrid& tg) const {
  if (static_cast<int>(q.size()) != tg.steps + 1)
    throw std::invalid_argument("control: wrong number of time nodes");
  for (const auto& v : q)
    if (v.size() != fem.n_gamma()) throw std::invalid_argument("control: q size mismatch");
}

DualVector DualVector::zero(const FemSystem& fem, const TimeGrid& tg) {
  DualVector r;
  r.ru.assign(tg.steps + 1, Vec::Zero(fem.n_vector()));
  r.rphi.assign(tg.steps + 1, Vec::Zero(fem.n_scalar()));
  return r;
}

double DualVector::apply(const Direction& d) const {
  double v = 0.0;
  for (std::size_t m = 0; m < ru.size(); ++m) v += ru[m].dot(d.u[m]);
  for (std::size_t m = 0; m < rphi.size(); ++m) v += rphi[m].dot(d.phi[m]);
  return v;
}

LowerMultiplier LowerMultiplier::zero(const FemSystem& fem, const TimeGrid& tg) {
  LowerMultiplier l;
  l.l1 = Vec::Zero(fem.n_scalar());
  l.l2.assign(tg.steps, Vec::Zero(fem.n_scalar()));
  return l;
}

SpaceTimeState add_scaled(const SpaceTimeState& s, const Direction& d, double h) {
  SpaceTimeState out = s;
  for (std::size_t m = 0; m < out.u.size(); ++m) out.u[m] += h * d.u[m];
  for (std::size_t m = 0; m < out.phi.size(); ++m) out.phi[m] += h * d.phi[m];
  return out;
}

namespace {
Vec uniform_vec(int n, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> dist(-amp, amp);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}
}  // namespace

SpaceTimeState random_state(const FemSystem& fem, const TimeGrid& tg, std::mt19937_64& rng,
                            double amplitude) {
  SpaceTimeState s;
  for (int m = 0; m <= tg.steps; ++m) {
    s.u.push_back(uniform_vec(fem.n_vector(), rng, amplitude));
    // keep phi around mid-range so degradation varies but stays positive
    s.phi.push_back(Vec::Constant(fem.n_scalar(), 0.5) +
                    uniform_vec(fem.n_scalar(), rng, amplitude * 0.8));
  }
  return s;
}

Direction random_direction(const FemSystem& fem, const TimeGrid& tg, std::mt19937_64& rng,
                           double amplitude) {
  Direction d;
  for (int m = 0; m <= tg.steps; ++m) {
    d.u.push_back(uniform_vec(fem.n_vector(), rng, amplitude));
    d.phi.push_back(uniform_vec(fem.n_scalar(), rng, amplitude));
  }
  return d;
}

Control random_control(const FemSystem& fem, const TimeGrid& tg, std::mt19937_64& rng,
                       double amplitude) {
  Control c;
  for (int m = 0; m <= tg.steps; ++m) c.q.push_back(uniform_vec(fem.n_gamma(), rng, amplitude));
  return c;
}

}  // namespace fraktur
