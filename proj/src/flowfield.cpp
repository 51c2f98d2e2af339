#include "meltblow/flowfield.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "meltblow/errors.hpp"

namespace meltblow {

namespace {

constexpr std::string_view kFlowHeader = "y,z,u_y,u_z,k,eps";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw ParseError("cannot parse number '" + std::string(field) + "'", line);
  return value;
}

void check_increasing(const std::vector<double>& axis, const char* name) {
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (!(axis[i] > axis[i - 1]))
      throw ValidationError(std::string("flow grid: ") + name + " axis is not strictly increasing at index " +
                            std::to_string(i));
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Cell index i with axis[i] <= v <= axis[i+1]; the last node maps to the last cell.
std::size_t locate(const std::vector<double>& axis, double v) {
  if (axis.size() == 1) return 0;
  auto it = std::upper_bound(axis.begin(), axis.end(), v);
  std::size_t i = static_cast<std::size_t>(it - axis.begin());
  if (i == 0) return 0;
  return std::min(i - 1, axis.size() - 2);
}

}  // namespace

FlowFieldGrid::FlowFieldGrid(std::vector<double> y, std::vector<double> z, std::vector<double> u_y,
                             std::vector<double> u_z, std::vector<double> k, std::vector<double> eps, double nu,
                             double rho)
    : y_(std::move(y)),
      z_(std::move(z)),
      u_y_(std::move(u_y)),
      u_z_(std::move(u_z)),
      k_(std::move(k)),
      eps_(std::move(eps)),
      nu_(nu),
      rho_(rho) {
  check_increasing(y_, "y");
  check_increasing(z_, "z");
  const std::size_t n = y_.size() * z_.size();
  if (u_y_.size() != n || u_z_.size() != n || k_.size() != n || eps_.size() != n)
    throw ValidationError("flow grid: field arrays do not match the grid dimensions");
  if (!(nu_ > 0.0) || !(rho_ > 0.0)) throw ValidationError("flow grid: nu and rho must be positive");
  for (std::size_t iz = 0; iz < z_.size(); ++iz) {
    for (std::size_t iy = 0; iy < y_.size(); ++iy) {
      const std::size_t i = index(iy, iz);
      if (!(k_[i] > 0.0) || !(eps_[i] > 0.0)) {
        std::ostringstream msg;
        msg << "flow grid: non-positive " << (!(k_[i] > 0.0) ? "k" : "eps") << " at node (iy=" << iy
            << ", iz=" << iz << ", y=" << y_[iy] << ", z=" << z_[iz] << ")";
        throw ValidationError(msg.str());
      }
    }
  }
}

FlowSample FlowFieldGrid::sample(const Vec3& x, double) const {
  if (empty()) throw DomainExit("flow grid is empty", x);
  const double py = x.y;
  const double pz = x.z;
  if (!(py >= y_.front() && py <= y_.back() && pz >= z_.front() && pz <= z_.back())) {
    std::ostringstream msg;
    msg << "position (y=" << py << ", z=" << pz << ") outside flow grid";
    throw DomainExit(msg.str(), x);
  }
  const std::size_t iy = locate(y_, py);
  const std::size_t iz = locate(z_, pz);
  const std::size_t iy1 = std::min(iy + 1, y_.size() - 1);
  const std::size_t iz1 = std::min(iz + 1, z_.size() - 1);
  const double wy = iy1 == iy ? 0.0 : (py - y_[iy]) / (y_[iy1] - y_[iy]);
  const double wz = iz1 == iz ? 0.0 : (pz - z_[iz]) / (z_[iz1] - z_[iz]);
  auto blend = [&](const std::vector<double>& f) {
    const double f00 = f[index(iy, iz)];
    const double f10 = f[index(iy1, iz)];
    const double f01 = f[index(iy, iz1)];
    const double f11 = f[index(iy1, iz1)];
    return (1.0 - wz) * ((1.0 - wy) * f00 + wy * f10) + wz * ((1.0 - wy) * f01 + wy * f11);
  };
  FlowSample s;
  s.mean_velocity = {0.0, blend(u_y_), blend(u_z_)};
  s.k = blend(k_);
  s.eps = blend(eps_);
  s.nu = nu_;
  s.rho = rho_;
  return s;
}

std::string FlowFieldGrid::describe() const {
  std::ostringstream out;
  out << "grid " << ny() << "x" << nz();
  return out.str();
}

std::filesystem::path default_sidecar(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".json");
  return p;
}

FlowFieldGrid load_flow_csv(const std::filesystem::path& csv, const std::filesystem::path& sidecar_arg) {
  const std::filesystem::path sidecar = sidecar_arg.empty() ? default_sidecar(csv) : sidecar_arg;

  std::ifstream meta_in(sidecar);
  if (!meta_in) throw IoError("cannot open flow sidecar " + sidecar.string());
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid flow sidecar " + sidecar.string() + ": " + e.what(), 0);
  }
  for (const char* key : {"nu", "rho", "ny", "nz"})
    if (!meta.contains(key) || !meta[key].is_number())
      throw ParseError("flow sidecar " + sidecar.string() + " lacks numeric field '" + key + "'", 0);
  const double nu = meta["nu"].get<double>();
  const double rho = meta["rho"].get<double>();
  const auto ny_signed = meta["ny"].get<long long>();
  const auto nz_signed = meta["nz"].get<long long>();
  if (ny_signed < 1 || nz_signed < 1) throw ValidationError("flow sidecar: ny and nz must be positive");
  const auto ny = static_cast<std::size_t>(ny_signed);
  const auto nz = static_cast<std::size_t>(nz_signed);

  std::ifstream in(csv);
  if (!in) throw IoError("cannot open flow file " + csv.string());
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("flow file is empty", 1);
  ++line_no;
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  if (trim(line) != kFlowHeader)
    throw ParseError("expected header '" + std::string(kFlowHeader) + "', found '" + line + "'", line_no);

  std::vector<double> y(ny), z(nz), u_y, u_z, k, eps;
  const std::size_t total = ny * nz;
  u_y.reserve(total);
  u_z.reserve(total);
  k.reserve(total);
  eps.reserve(total);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (row >= total) throw ParseError("more data rows than ny*nz = " + std::to_string(total), line_no);
    std::array<double, 6> v{};
    std::string_view rest = line;
    for (std::size_t c = 0; c < 6; ++c) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (c == 5))
        throw ParseError("expected 6 comma-separated columns", line_no);
      v[c] = parse_number(rest.substr(0, comma), line_no);
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
    const std::size_t iz = row / ny;
    const std::size_t iy = row % ny;
    if (iz == 0) y[iy] = v[0];
    if (iy == 0) z[iz] = v[1];
    if (v[0] != y[iy] || v[1] != z[iz])
      throw ParseError("rows are not in z-major order over a rectilinear grid", line_no);
    u_y.push_back(v[2]);
    u_z.push_back(v[3]);
    k.push_back(v[4]);
    eps.push_back(v[5]);
    ++row;
  }
  if (row != total)
    throw ParseError("expected " + std::to_string(total) + " data rows, found " + std::to_string(row), line_no);
  return FlowFieldGrid(std::move(y), std::move(z), std::move(u_y), std::move(u_z), std::move(k), std::move(eps),
                       nu, rho);
}

void write_flow_csv(const FlowFieldGrid& grid, const std::filesystem::path& csv,
                    const std::filesystem::path& sidecar_arg) {
  if (grid.empty()) throw ValidationError("cannot write an empty flow grid");
  const std::filesystem::path sidecar = sidecar_arg.empty() ? default_sidecar(csv) : sidecar_arg;
  std::ofstream out(csv);
  if (!out) throw IoError("cannot open " + csv.string() + " for writing");
  out << kFlowHeader << '\n';
  for (std::size_t iz = 0; iz < grid.nz(); ++iz) {
    for (std::size_t iy = 0; iy < grid.ny(); ++iy) {
      const std::size_t i = grid.index(iy, iz);
      out << format_number(grid.y()[iy]) << ',' << format_number(grid.z()[iz]) << ','
          << format_number(grid.u_y()[i]) << ',' << format_number(grid.u_z()[i]) << ','
          << format_number(grid.k()[i]) << ',' << format_number(grid.eps()[i]) << '\n';
    }
  }
  nlohmann::json meta = {{"nu", grid.nu()}, {"rho", grid.rho()}, {"ny", grid.ny()}, {"nz", grid.nz()}};
  std::ofstream meta_out(sidecar);
  if (!meta_out) throw IoError("cannot open " + sidecar.string() + " for writing");
  meta_out << meta.dump(2) << '\n';
}

FlowFieldGrid rasterize(const FlowSource& flow, std::vector<double> y, std::vector<double> z) {
  const std::size_t n = y.size() * z.size();
  std::vector<double> u_y(n), u_z(n), k(n), eps(n);
  double nu = 0.0;
  double rho = 0.0;
  for (std::size_t iz = 0; iz < z.size(); ++iz) {
    for (std::size_t iy = 0; iy < y.size(); ++iy) {
      const FlowSample s = flow.sample({0.0, y[iy], z[iz]}, 0.0);
      const std::size_t i = iz * y.size() + iy;
      u_y[i] = s.mean_velocity.y;
      u_z[i] = s.mean_velocity.z;
      k[i] = s.k;
      eps[i] = s.eps;
      nu = s.nu;
      rho = s.rho;
    }
  }
  return FlowFieldGrid(std::move(y), std::move(z), std::move(u_y), std::move(u_z), std::move(k), std::move(eps),
                       nu, rho);
}

void SyntheticJetParams::validate() const {
  const double positives[] = {inlet_speed, inlet_k,   inlet_eps, slot_half_width, virtual_origin, spreading_rate,
                              speed_decay, k_decay,   eps_decay, ambient_fraction, nu,            rho,
                              y_half_extent, z_max};
  for (double v : positives)
    if (!(v > 0.0)) throw ValidationError("synthetic jet: all parameters must be positive");
  if (!(z_min < 0.0)) throw ValidationError("synthetic jet: z_min must be negative");
  if (!(ambient_fraction < 1.0)) throw ValidationError("synthetic jet: ambient_fraction must be below 1");
}

SyntheticPlanarJet::SyntheticPlanarJet(const SyntheticJetParams& params) : params_(params) { params_.validate(); }

FlowSample SyntheticPlanarJet::sample(const Vec3& x, double) const {
  const SyntheticJetParams& p = params_;
  if (!(std::abs(x.y) <= p.y_half_extent && x.z >= p.z_min && x.z <= p.z_max)) {
    std::ostringstream msg;
    msg << "position (y=" << x.y << ", z=" << x.z << ") outside synthetic jet domain";
    throw DomainExit(msg.str(), x);
  }
  const double distance = std::abs(x.z) + p.virtual_origin;
  const double lambda = p.spreading_rate * distance / p.slot_half_width;
  auto decay = [&](double exponent) { return std::min(1.0, std::pow(lambda, -exponent)); };
  const double half_width = p.slot_half_width + p.spreading_rate * distance;
  const double eta = x.y / half_width;
  const double g = std::exp(-std::numbers::ln2 * eta * eta);
  const double h = p.ambient_fraction + (1.0 - p.ambient_fraction) * g;
  const double centerline = p.inlet_speed * decay(p.speed_decay);

  FlowSample s;
  s.mean_velocity = {0.0, p.spreading_rate * eta * centerline * g, -centerline * g};
  s.k = p.inlet_k * decay(p.k_decay) * h;
  s.eps = p.inlet_eps * decay(p.eps_decay) * h * h;
  s.nu = p.nu;
  s.rho = p.rho;
  return s;
}

std::string SyntheticPlanarJet::describe() const { return "synthetic planar jet"; }

std::string UniformFlow::describe() const { return "uniform flow"; }

GlobalFluctuationField::GlobalFluctuationField(const FlowSource& flow, const ParameterSet& ps, ZetaMode mode,
                                               TemporalModel temporal)
    : flow_(&flow), ps_(&ps), mode_(mode), temporal_(temporal) {
  if (mode_ == ZetaMode::Zero && ps.zeta() != 0.0)
    throw DomainError("zero-zeta globalization needs a parameter set drawn with zeta = 0");
}

Vec3 GlobalFluctuationField::at(const FlowSample& s, const Vec3& x, double t) const {
  const double sqrt_k = std::sqrt(s.k);
  const double inv_length = s.eps / (s.k * sqrt_k);
  const double inv_time = s.eps / s.k;
  LocalFrame frame;
  frame.mean_velocity = s.mean_velocity / sqrt_k;
  frame.t_T = temporal_.t_T;
  const Vec3 xd = x * inv_length;
  const double td = t * inv_time;
  if (mode_ == ZetaMode::Zero) return eval_local_fluctuation(xd, td, *ps_, frame) * sqrt_k;

  frame.zeta = s.zeta();
  const SpectrumModel local(frame.zeta);
  const ParameterSet remapped = ps_->retargeted(local);
  return eval_local_fluctuation(xd, td, remapped, frame) * sqrt_k;
}

Vec3 eval_global_fluctuation(const Vec3& x, double t, const FlowSource& flow, const ParameterSet& ps,
                             ZetaMode mode) {
  return GlobalFluctuationField(flow, ps, mode)(x, t);
}

}  // namespace meltblow
