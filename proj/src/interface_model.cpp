#include "wdiff/interface_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "wdiff/errors.hpp"

namespace wdiff {

InterfaceState::InterfaceState(std::size_t N, std::vector<double> heights)
    : N_(N), heights_(std::move(heights)) {
  if (N < 1 || heights_.size() != N - 1) throw InvalidArgument("interface state needs N-1 heights");
  const double top = std::sqrt(static_cast<double>(N));
  double prev = 0.0;
  for (const double h : heights_) {
    if (!(h >= prev) || h > top) throw InvalidArgument("interface heights must be ordered in [0, sqrt(N)]");
    prev = h;
  }
}

double InterfaceState::height(std::size_t i) const noexcept {
  if (i == 0) return 0.0;
  if (i >= N_) return std::sqrt(static_cast<double>(N_));
  return heights_[i - 1];
}

double interaction_potential(double r, std::size_t N, double beta) {
  return (1.0 - beta / static_cast<double>(N)) * std::log(r);
}

double hamiltonian(const InterfaceState& phi, double beta) {
  const double coeff = 1.0 - beta / static_cast<double>(phi.N());
  double s = 0.0;
  for (std::size_t x = 0; x < phi.N(); ++x) {
    const double r = phi.height(x + 1) - phi.height(x);
    if (!(r > 0.0)) throw DegenerateSpacing(x + 1);
    s += std::log(r);
  }
  return coeff * s;
}

InterfaceState to_interface(const ParticleConfig& x) {
  const double scale = std::sqrt(static_cast<double>(x.N()));
  std::vector<double> h(x.positions().begin(), x.positions().end());
  for (auto& v : h) v = std::min(v * scale, scale);
  return InterfaceState(x.N(), std::move(h));
}

ParticleConfig from_interface(const InterfaceState& phi) {
  const double scale = std::sqrt(static_cast<double>(phi.N()));
  std::vector<double> x(phi.heights().begin(), phi.heights().end());
  for (auto& v : x) v = std::min(v / scale, 1.0);
  return ParticleConfig(std::move(x));
}

double interface_time(double t, std::size_t N) {
  const double n = static_cast<double>(N);
  return n * n * t;
}

double gibbs_consistency(std::span<const ParticleConfig> samples, double beta_q, double beta_h) {
  if (samples.size() < 2) throw InvalidArgument("gibbs_consistency: needs at least two samples");
  double lo = 0.0, hi = 0.0;
  for (std::size_t a = 0; a < samples.size(); ++a) {
    const auto& x = samples[a];
    const double c = log_density_qn(x.positions(), beta_q) + hamiltonian(to_interface(x), beta_h);
    if (a == 0) {
      lo = hi = c;
    } else {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
  }
  return hi - lo;
}

double gibbs_consistency(std::span<const ParticleConfig> samples, double beta) {
  return gibbs_consistency(samples, beta, beta);
}

std::vector<QuantileStep> fluctuation_field(const SimulationPath& path) {
  std::vector<QuantileStep> out;
  out.reserve(path.states.size());
  // Heights divided by sqrt(N) are the particle positions themselves.
  for (const auto& x : path.states) out.push_back(embed_quantile(x));
  return out;
}

void write_interface(std::ostream& out, const InterfaceState& phi) {
  out << "# scale=sqrt(N) N=" << phi.N() << '\n';
  bool first = true;
  for (const double h : phi.heights()) {
    if (!first) out << ',';
    out << format_double(h);
    first = false;
  }
  out << '\n';
}

InterfaceState read_interface(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw InvalidArgument("interface file is empty");
  const auto pos = header.find("N=");
  if (header.rfind("# scale=sqrt(N)", 0) != 0 || pos == std::string::npos) {
    throw InvalidArgument("interface header must read '# scale=sqrt(N) N=<n>'");
  }
  const auto N = static_cast<std::size_t>(std::stoull(header.substr(pos + 2)));
  std::string line;
  std::getline(in, line);
  std::vector<double> h;
  std::size_t start = 0;
  while (!line.empty() && start <= line.size()) {
    const auto comma = line.find(',', start);
    const auto field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      h.push_back(std::stod(field));
    } catch (const std::exception&) {
      throw InvalidArgument("bad interface height '" + field + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return InterfaceState(N, std::move(h));
}

}  // namespace wdiff
