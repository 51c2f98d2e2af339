#include "meltblow/fieldsampler.hpp"

#include <cmath>

#include "meltblow/errors.hpp"

namespace meltblow {

namespace {

inline double surrogate(double real, double imag, double phase, Branch branch) {
  const double c = std::cos(phase);
  const double s = std::sin(phase);
  return branch == Branch::Real ? real * c - imag * s : real * s + imag * c;
}

}  // namespace

bool operator==(const ModeParameters& a, const ModeParameters& b) {
  return a.direction == b.direction && a.xi_wavenumber == b.xi_wavenumber && a.xi_quantile == b.xi_quantile &&
         a.xi_sign == b.xi_sign && a.xi_real == b.xi_real && a.xi_imag == b.xi_imag &&
         a.psi_frequency == b.psi_frequency && a.psi_real == b.psi_real && a.psi_imag == b.psi_imag;
}

bool operator==(const ParameterSet& a, const ParameterSet& b) {
  return a.branch_ == b.branch_ && a.seed_ == b.seed_ && a.stream_ == b.stream_ && a.zeta_ == b.zeta_ &&
         a.modes_ == b.modes_;
}

Vec3 sample_sphere(RandomStream& rng) {
  for (;;) {
    const Vec3 g{rng.normal(), rng.normal(), rng.normal()};
    const double r = norm(g);
    if (r > 1e-300) return g / r;
  }
}

double sample_wavenumber(const SpectrumModel& model, RandomStream& rng) {
  const double magnitude = model.quantile(rng.uniform());
  return rng.uniform() < 0.5 ? -magnitude : magnitude;
}

ParameterSet ParameterSet::draw(std::size_t modes, const SpectrumModel& model, std::uint64_t seed,
                                std::uint64_t stream, Branch branch) {
  if (modes == 0) throw DomainError("parameter set: at least one superposition copy is required");
  ParameterSet ps;
  ps.branch_ = branch;
  ps.seed_ = seed;
  ps.stream_ = stream;
  ps.zeta_ = model.zeta();
  ps.modes_.resize(modes);

  RandomStream rng(seed, stream);
  for (auto& m : ps.modes_) {
    m.direction = sample_sphere(rng);
    for (int j = 0; j < 3; ++j) {
      m.xi_quantile[j] = rng.uniform();
      m.xi_sign[j] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      m.xi_wavenumber[j] = m.xi_sign[j] * model.quantile(m.xi_quantile[j]);
    }
    for (int j = 0; j < 3; ++j) {
      m.xi_real[j] = rng.normal();
      m.xi_imag[j] = rng.normal();
    }
    m.psi_frequency = rng.normal();
    m.psi_real = rng.normal();
    m.psi_imag = rng.normal();
  }
  return ps;
}

ParameterSet ParameterSet::retargeted(const SpectrumModel& model) const {
  ParameterSet ps = *this;
  ps.zeta_ = model.zeta();
  for (auto& m : ps.modes_)
    for (int j = 0; j < 3; ++j) m.xi_wavenumber[j] = m.xi_sign[j] * model.quantile(m.xi_quantile[j]);
  return ps;
}

double eval_surrogate_w(double s, std::size_t l, int j, const ParameterSet& ps) {
  if (j < 0 || j > 2) throw DomainError("surrogate process: component index must be 0, 1 or 2");
  const ModeParameters& m = ps.mode(l);
  return surrogate(m.xi_real[j], m.xi_imag[j], m.xi_wavenumber[j] * s, ps.branch());
}

Vec3 eval_spatial_field(const Vec3& x, std::size_t l, const ParameterSet& ps) {
  const ModeParameters& m = ps.mode(l);
  const double s = dot(x, m.direction);
  Vec3 w;
  for (int j = 0; j < 3; ++j) w[j] = surrogate(m.xi_real[j], m.xi_imag[j], m.xi_wavenumber[j] * s, ps.branch());
  return w - m.direction * dot(m.direction, w);
}

double eval_time_process(double t, std::size_t l, const ParameterSet& ps, const TemporalModel& tm) {
  const ModeParameters& m = ps.mode(l);
  return surrogate(m.psi_real, m.psi_imag, m.psi_frequency * t / tm.t_T, ps.branch());
}

Vec3 eval_local_fluctuation(const Vec3& x, double t, const ParameterSet& ps, const LocalFrame& frame) {
  const Vec3 advected = x - frame.mean_velocity * t;
  const double tau = t / frame.t_T;
  const Branch branch = ps.branch();
  Vec3 sum;
  for (const ModeParameters& m : ps.modes()) {
    const double s = dot(advected, m.direction);
    Vec3 w;
    for (int j = 0; j < 3; ++j) w[j] = surrogate(m.xi_real[j], m.xi_imag[j], m.xi_wavenumber[j] * s, branch);
    const Vec3 xi = w - m.direction * dot(m.direction, w);
    sum += xi * surrogate(m.psi_real, m.psi_imag, m.psi_frequency * tau, branch);
  }
  return sum / std::sqrt(static_cast<double>(ps.size()));
}

}  // namespace meltblow
