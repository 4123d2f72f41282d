#include "oatdcc/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace oatdcc {

ModelParams RunConfig::model_params() const {
  return {well_depth, well_width, interaction_strength, softening, squared_distance};
}

WavepacketParams RunConfig::wavepacket_params() const { return {wp_x0, wp_k0, wp_sigma, wp_spin}; }

PropagationOptions RunConfig::propagation_options() const {
  PropagationOptions o;
  o.dt = dt;
  o.t_final = t_final;
  o.stride = stride;
  o.density_stride = density_stride;
  o.potential_substeps = potential_substeps;
  o.integrator = integrator == "rk4" ? Integrator::rk4 : Integrator::strang;
  o.eps = eps;
  return o;
}

RelaxOptions RunConfig::relax_options() const {
  RelaxOptions o;
  o.ds = relax_ds;
  o.tol = relax_tol;
  o.max_steps = relax_max_steps;
  o.eps = eps;
  return o;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw std::invalid_argument("config key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw std::invalid_argument("config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + v + "'");
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field field(T RunConfig::*m) {
  Field f;
  f.set = [m](RunConfig& c, const std::string& k, const std::string& v) {
    if constexpr (std::is_same_v<T, double>)
      c.*m = to_double(k, v);
    else if constexpr (std::is_same_v<T, bool>)
      c.*m = to_bool(k, v);
    else if constexpr (std::is_same_v<T, std::string>)
      c.*m = v;
    else
      c.*m = to_int<T>(k, v);
  };
  f.get = [m](const RunConfig& c) -> std::string {
    if constexpr (std::is_same_v<T, double>)
      return fmt_double(c.*m);
    else if constexpr (std::is_same_v<T, bool>)
      return c.*m ? "true" : "false";
    else if constexpr (std::is_same_v<T, std::string>)
      return c.*m;
    else
      return std::to_string(c.*m);
  };
  return f;
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"method", field(&RunConfig::method)},
      {"half_width", field(&RunConfig::half_width)},
      {"n_grid", field(&RunConfig::n_grid)},
      {"well_depth", field(&RunConfig::well_depth)},
      {"well_width", field(&RunConfig::well_width)},
      {"interaction_strength", field(&RunConfig::interaction_strength)},
      {"softening", field(&RunConfig::softening)},
      {"squared_distance", field(&RunConfig::squared_distance)},
      {"rank", field(&RunConfig::rank)},
      {"n_particles", field(&RunConfig::n_particles)},
      {"n_orbitals", field(&RunConfig::n_orbitals)},
      {"dt", field(&RunConfig::dt)},
      {"t_final", field(&RunConfig::t_final)},
      {"stride", field(&RunConfig::stride)},
      {"density_stride", field(&RunConfig::density_stride)},
      {"potential_substeps", field(&RunConfig::potential_substeps)},
      {"integrator", field(&RunConfig::integrator)},
      {"eps", field(&RunConfig::eps)},
      {"relax_ds", field(&RunConfig::relax_ds)},
      {"relax_tol", field(&RunConfig::relax_tol)},
      {"relax_max_steps", field(&RunConfig::relax_max_steps)},
      {"attach_wavepacket", field(&RunConfig::attach_wavepacket)},
      {"wp_x0", field(&RunConfig::wp_x0)},
      {"wp_k0", field(&RunConfig::wp_k0)},
      {"wp_sigma", field(&RunConfig::wp_sigma)},
      {"wp_spin", field(&RunConfig::wp_spin)},
      {"seed", field(&RunConfig::seed)},
      {"output", field(&RunConfig::output)},
      {"initial_checkpoint", field(&RunConfig::initial_checkpoint)},
  };
  return table;
}

}  // namespace

void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw std::invalid_argument("unknown config key '" + key + "'");
  it->second.set(c, key, value);
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::map<std::string, std::string> config_entries(const RunConfig& c) {
  std::map<std::string, std::string> out;
  for (const auto& [k, f] : fields()) out[k] = f.get(c);
  return out;
}

void validate(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  try {
    parse_method(c.method);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (!(c.half_width > 0.0)) fail("half_width must be positive");
  if (c.n_grid < 4 || (c.n_grid & (c.n_grid - 1)) != 0) fail("n_grid must be a power of two >= 4");
  if (!(c.softening > 0.0)) fail("softening must be positive");
  if (!(c.well_width > 0.0)) fail("well_width must be positive");
  if (c.rank < -1 || c.rank > c.n_grid) fail("rank must be -1 (automatic) or between 0 and n_grid");
  if (c.n_particles < 1) fail("n_particles must be >= 1");
  if (c.n_orbitals < c.n_particles) fail("n_orbitals must be >= n_particles");
  const int L = c.n_orbitals + (c.attach_wavepacket ? 1 : 0);
  if (L > 2 * c.n_grid) fail("more orbitals than basis functions");
  if (L > 63) fail("at most 63 orbitals are supported");
  if (c.method == "tdhf" && c.n_orbitals != c.n_particles) fail("tdhf requires n_orbitals == n_particles");
  if (!(c.dt > 0.0)) fail("dt must be positive");
  if (!(c.t_final >= 0.0)) fail("t_final must be non-negative");
  if (c.stride < 1 || c.density_stride < 1) fail("strides must be >= 1");
  if (c.potential_substeps < 1) fail("potential_substeps must be >= 1");
  if (c.integrator != "strang" && c.integrator != "rk4") fail("integrator must be strang or rk4");
  if (!(c.eps > 0.0)) fail("eps must be positive");
  if (!(c.relax_ds > 0.0) || !(c.relax_tol > 0.0) || c.relax_max_steps < 1) fail("invalid relaxation settings");
  if (!(c.wp_sigma > 0.0)) fail("wp_sigma must be positive");
  if (c.wp_spin != 0 && c.wp_spin != 1) fail("wp_spin must be 0 (up) or 1 (down)");
  if (c.output.empty()) fail("output directory must be set");
}

// ---------------------------------------------------------------------------

void write_energy_csv(const std::string& path, const std::vector<ObservableRecord>& records) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path);
  std::fprintf(f, "t,ReE,ImE,norm_re,norm_im,f_t\n");
  for (const auto& r : records)
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.energy.real(), r.energy.imag(), r.norm.real(),
                 r.norm.imag(), r.f);
  std::fclose(f);
}

std::vector<ObservableRecord> read_energy_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(f, line);
  if (trim(line) != "t,ReE,ImE,norm_re,norm_im,f_t") throw std::runtime_error("unexpected energy.csv header");
  std::vector<ObservableRecord> out;
  while (std::getline(f, line)) {
    if (trim(line).empty()) continue;
    double v[6];
    std::istringstream ls(line);
    std::string tok;
    for (double& x : v) {
      if (!std::getline(ls, tok, ',')) throw std::runtime_error("short energy.csv row");
      x = to_double("energy.csv", trim(tok));
    }
    out.push_back({v[0], {v[1], v[2]}, {v[3], v[4]}, v[5]});
  }
  return out;
}

namespace {

// Little-endian scalar writer/reader independent of the host byte order.
template <typename T>
void put(std::ostream& o, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  o.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get(std::istream& i) {
  unsigned char b[sizeof(T)];
  if (!i.read(reinterpret_cast<char*>(b), sizeof(T))) throw std::runtime_error("unexpected end of file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

void put_complex(std::ostream& o, cplx z) {
  put<double>(o, z.real());
  put<double>(o, z.imag());
}

cplx get_complex(std::istream& i) {
  const double re = get<double>(i);
  const double im = get<double>(i);
  return {re, im};
}

void put_matrix(std::ostream& o, const MatrixXc& m) {
  put<std::uint32_t>(o, static_cast<std::uint32_t>(m.rows()));
  put<std::uint32_t>(o, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) put_complex(o, m(r, c));
}

MatrixXc get_matrix(std::istream& i) {
  const auto rows = get<std::uint32_t>(i);
  const auto cols = get<std::uint32_t>(i);
  MatrixXc m(rows, cols);
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = get_complex(i);
  return m;
}

void put_tensor(std::ostream& o, const Tensor4c& t) {
  for (int d = 0; d < 4; ++d) put<std::uint32_t>(o, static_cast<std::uint32_t>(t.dim(d)));
  for (std::size_t k = 0; k < t.size(); ++k) put_complex(o, t.data()[k]);
}

Tensor4c get_tensor(std::istream& i) {
  std::uint32_t d[4];
  for (auto& x : d) x = get<std::uint32_t>(i);
  Tensor4c t(d[0], d[1], d[2], d[3]);
  for (std::size_t k = 0; k < t.size(); ++k) t.data()[k] = get_complex(i);
  return t;
}

void expect_magic(std::istream& i, const char* magic) {
  char m[4];
  if (!i.read(m, 4) || std::memcmp(m, magic, 4) != 0)
    throw std::runtime_error(std::string("bad magic, expected ") + magic);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw std::runtime_error("cannot write " + path);
  return o;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream i(path, std::ios::binary);
  if (!i) throw std::runtime_error("cannot open " + path);
  return i;
}

constexpr std::uint32_t kDensityVersion = 1;
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void write_density_bin(const std::string& path, int n_grid, const std::vector<DensitySnapshot>& snaps) {
  if (n_grid <= 0) throw std::invalid_argument("density grid size must be positive");
  const auto n_basis = static_cast<std::uint32_t>(2 * n_grid);
  for (const auto& s : snaps)
    if (s.n.size() != n_basis) throw std::invalid_argument("density snapshot length mismatch");
  std::ofstream o = open_out(path);
  o.write("OATD", 4);
  put<std::uint32_t>(o, kDensityVersion);
  put<std::uint32_t>(o, static_cast<std::uint32_t>(snaps.size()));
  put<std::uint32_t>(o, n_basis);
  put<std::uint32_t>(o, static_cast<std::uint32_t>(n_grid));
  for (const auto& s : snaps) {
    put<double>(o, s.t);
    for (Eigen::Index k = 0; k < s.n.size(); ++k) put_complex(o, s.n[k]);
  }
  if (!o) throw std::runtime_error("write failed: " + path);
}

DensityFile read_density_bin(const std::string& path) {
  std::ifstream i = open_in(path);
  expect_magic(i, "OATD");
  DensityFile f;
  f.version = get<std::uint32_t>(i);
  if (f.version != kDensityVersion) throw std::runtime_error("unsupported density.bin version");
  const auto n_t = get<std::uint32_t>(i);
  f.n_basis = get<std::uint32_t>(i);
  f.n_grid = get<std::uint32_t>(i);
  f.snapshots.resize(n_t);
  for (auto& s : f.snapshots) {
    s.t = get<double>(i);
    s.n.resize(f.n_basis);
    for (std::uint32_t k = 0; k < f.n_basis; ++k) s.n[k] = get_complex(i);
  }
  return f;
}

void write_checkpoint(const std::string& path, const McState& s) {
  std::ofstream o = open_out(path);
  o.write("OATC", 4);
  put<std::uint32_t>(o, kCheckpointVersion);
  put<std::uint32_t>(o, 0);  // kind: MCTDHF
  put<double>(o, s.t);
  put<double>(o, s.dx);
  put<std::int32_t>(o, s.space.n_particles);
  put<std::int32_t>(o, s.space.n_orbitals);
  put<std::int32_t>(o, s.space.n_up);
  put<std::uint32_t>(o, static_cast<std::uint32_t>(s.space.spins.size()));
  for (int sp : s.space.spins) put<std::int32_t>(o, sp);
  put<std::uint32_t>(o, static_cast<std::uint32_t>(s.space.dets.size()));
  for (auto m : s.space.dets) put<std::uint64_t>(o, m);
  put_matrix(o, s.ket);
  for (Eigen::Index k = 0; k < s.coeff.size(); ++k) put_complex(o, s.coeff[k]);
  if (!o) throw std::runtime_error("write failed: " + path);
}

void write_checkpoint(const std::string& path, const CCState& s) {
  std::ofstream o = open_out(path);
  o.write("OATC", 4);
  put<std::uint32_t>(o, kCheckpointVersion);
  put<std::uint32_t>(o, 1);  // kind: OATDCCD
  put<double>(o, s.t);
  put<double>(o, s.orbitals.dx);
  put<std::int32_t>(o, s.orbitals.n_occ);
  put_matrix(o, s.orbitals.ket);
  put_matrix(o, s.orbitals.bra);
  put_tensor(o, s.amp.tau);
  put_tensor(o, s.amp.lambda);
  if (!o) throw std::runtime_error("write failed: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream i = open_in(path);
  expect_magic(i, "OATC");
  if (get<std::uint32_t>(i) != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version");
  const auto kind = get<std::uint32_t>(i);
  if (kind == 0) {
    McState s;
    s.t = get<double>(i);
    s.dx = get<double>(i);
    s.space.n_particles = get<std::int32_t>(i);
    s.space.n_orbitals = get<std::int32_t>(i);
    s.space.n_up = get<std::int32_t>(i);
    s.space.spins.resize(get<std::uint32_t>(i));
    for (int& sp : s.space.spins) sp = get<std::int32_t>(i);
    s.space.dets.resize(get<std::uint32_t>(i));
    for (auto& m : s.space.dets) m = get<std::uint64_t>(i);
    s.ket = get_matrix(i);
    s.coeff.resize(s.space.size());
    for (Eigen::Index k = 0; k < s.coeff.size(); ++k) s.coeff[k] = get_complex(i);
    return s;
  }
  if (kind == 1) {
    CCState s;
    s.t = get<double>(i);
    s.orbitals.dx = get<double>(i);
    s.orbitals.n_occ = get<std::int32_t>(i);
    s.orbitals.ket = get_matrix(i);
    s.orbitals.bra = get_matrix(i);
    s.amp.tau = get_tensor(i);
    s.amp.lambda = get_tensor(i);
    return s;
  }
  throw std::runtime_error("unknown checkpoint kind");
}

}  // namespace oatdcc
