#include "sfpc/archive.hpp"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "sfpc/config.hpp"
#include "sfpc/data_io.hpp"
#include "sfpc/error.hpp"

namespace sfpc {
namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b, 4);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ParseError("archive: truncated matrix data");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("archive: truncated matrix header");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

Eigen::MatrixXd column(const Eigen::VectorXd& v) { return v; }

Eigen::MatrixXd row_of(const std::vector<double>& v) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

// Blocks side by side: [M_0 M_1 ...].
Eigen::MatrixXd hstack(const std::vector<Eigen::MatrixXd>& blocks, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd out(rows, cols * static_cast<Eigen::Index>(blocks.size()));
  for (std::size_t i = 0; i < blocks.size(); ++i) out.middleCols(cols * static_cast<Eigen::Index>(i), cols) = blocks[i];
  return out;
}

std::vector<Eigen::MatrixXd> hsplit(const Eigen::MatrixXd& m, Eigen::Index cols) {
  std::vector<Eigen::MatrixXd> out;
  if (cols == 0) return out;
  for (Eigen::Index c = 0; c + cols <= m.cols(); c += cols) out.push_back(m.middleCols(c, cols));
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

}  // namespace

void write_matrices(std::ostream& out, const std::vector<NamedMatrix>& mats) {
  for (const auto& [name, m] : mats) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) put_u64(out, std::bit_cast<std::uint64_t>(m(r, c)));
  }
}

std::vector<NamedMatrix> read_matrices(std::istream& in) {
  std::vector<NamedMatrix> out;
  while (in.peek() != std::char_traits<char>::eof()) {
    const std::uint32_t len = get_u32(in);
    if (len > 4096) throw ParseError("archive: implausible matrix name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw ParseError("archive: truncated matrix name");
    const std::uint64_t rows = get_u64(in), cols = get_u64(in);
    if (rows > (1ull << 31) || cols > (1ull << 31)) throw ParseError("archive: implausible matrix size for " + name);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = std::bit_cast<double>(get_u64(in));
    out.emplace_back(std::move(name), std::move(m));
  }
  return out;
}

void save_model(const FittedModel& model, const std::string& dir) {
  if (!model.bases) throw ArgumentError("cannot archive a model without bases");
  std::filesystem::create_directories(dir);
  const auto& b = *model.bases;
  const auto& ts = b.temporal.spec();
  const auto& cfg = model.config;
  const int J = model.params.J(), p = model.moments.p, n = model.moments.n();

  std::ofstream man(std::filesystem::path(dir) / "manifest.txt");
  if (!man) throw ArgumentError("cannot write archive manifest in " + dir);
  man << "format = sfpc-model\n";
  man << "version = " << kArchiveVersion << "\n";
  man << "[basis]\n";
  man << "degree = " << b.spatial.degree() << "\nsmoothness = " << b.spatial.smoothness() << "\n";
  man << "poly_degree = " << ts.poly_degree << "\nknots = " << join_doubles(ts.knots) << "\n";
  man << "fourier_harmonics = " << ts.fourier_harmonics << "\nperiod = " << format_double(ts.period) << "\n";
  man << "normalize = " << (ts.normalize ? "true" : "false") << "\nhorizon = " << b.temporal.horizon() << "\n";
  man << "[config]\n";
  man << "J = " << cfg.J << "\np = " << cfg.p << "\n";
  man << "mu_s = " << format_double(cfg.penalties.mu_s) << "\nmu_t = " << format_double(cfg.penalties.mu_t)
      << "\npc = " << format_double(cfg.penalties.pc) << "\n";
  man << "tol = " << format_double(cfg.tol) << "\nmax_iter = " << cfg.max_iter << "\n";
  man << "freeze_K = " << (cfg.freeze_K ? "true" : "false") << "\nstationary_init = "
      << (cfg.stationary_init ? "true" : "false") << "\n";
  man << "init_ridge = " << format_double(cfg.init_ridge) << "\nrecord_blocks = " << (cfg.record_blocks ? "true" : "false")
      << "\n";
  man << "[fit]\n";
  man << "converged = " << (model.converged ? "true" : "false") << "\niterations = " << model.iterations << "\n";
  man << "observation_count = " << model.observation_count << "\n";
  man << "moments_J = " << J << "\nmoments_p = " << p << "\nn = " << n << "\n";
  man << "warnings = " << model.warnings.size() << "\n";
  for (std::size_t i = 0; i < model.warnings.size(); ++i) man << "warning" << i << " = " << model.warnings[i] << "\n";

  std::vector<NamedMatrix> mats;
  const auto& mesh = b.spatial.triangulation();
  Eigen::MatrixXd verts(static_cast<Eigen::Index>(mesh.vertices().size()), 2);
  for (std::size_t i = 0; i < mesh.vertices().size(); ++i)
    verts.row(static_cast<Eigen::Index>(i)) << mesh.vertices()[i].x, mesh.vertices()[i].y;
  Eigen::MatrixXd tris(static_cast<Eigen::Index>(mesh.triangles().size()), 3);
  for (std::size_t i = 0; i < mesh.triangles().size(); ++i)
    for (int k = 0; k < 3; ++k) tris(static_cast<Eigen::Index>(i), k) = mesh.triangles()[i].v[static_cast<std::size_t>(k)];
  mats.emplace_back("mesh.vertices", verts);
  mats.emplace_back("mesh.triangles", tris);
  const auto& prm = model.params;
  mats.emplace_back("params.theta_b", column(prm.theta_b));
  mats.emplace_back("params.theta_c", column(prm.theta_c));
  mats.emplace_back("params.Theta", prm.Theta);
  mats.emplace_back("params.K", prm.K);
  mats.emplace_back("params.sigma2", Eigen::MatrixXd::Constant(1, 1, prm.sigma2));
  mats.emplace_back("params.sigma_j2", column(prm.sigma_j2));
  mats.emplace_back("moments.alpha", model.moments.alpha);
  mats.emplace_back("moments.Sigma", hstack(model.moments.Sigma, J, J));
  std::vector<Eigen::MatrixXd> lags;
  for (const auto& per_t : model.moments.lag_cov)
    for (const auto& m : per_t) lags.push_back(m);
  mats.emplace_back("moments.lag_cov", hstack(lags, J, J));
  mats.emplace_back("trace.q", row_of(model.q_trace));
  mats.emplace_back("trace.loglik", row_of(model.loglik_trace));
  mats.emplace_back("fit.neg2_loglik", Eigen::MatrixXd::Constant(1, 1, model.neg2_loglik));
  mats.emplace_back("fit.final_state", column(model.final_state));
  mats.emplace_back("fit.final_state_cov", model.final_state_cov);
  std::ofstream bin(std::filesystem::path(dir) / "matrices.bin", std::ios::binary);
  if (!bin) throw ArgumentError("cannot write archive matrices in " + dir);
  write_matrices(bin, mats);
}

FittedModel load_model(const std::string& dir) {
  const auto mpath = std::filesystem::path(dir) / "manifest.txt";
  std::ifstream man(mpath);
  if (!man) throw ParseError("archive: missing " + mpath.string());
  KeyValueConfig kv;
  try {
    kv = KeyValueConfig::parse(man, mpath.string());
  } catch (const ConfigError& e) {
    throw ParseError(e.what());
  }
  if (kv.get_string("format", "") != "sfpc-model") throw ParseError("archive: not an sfpc model archive");
  if (kv.get_int("version", 0) != kArchiveVersion) throw ParseError("archive: unsupported version");
  std::ifstream bin(std::filesystem::path(dir) / "matrices.bin", std::ios::binary);
  if (!bin) throw ParseError("archive: missing matrices.bin");
  std::map<std::string, Eigen::MatrixXd> mats;
  for (auto& [name, m] : read_matrices(bin)) mats[name] = std::move(m);
  auto get = [&](const std::string& name) -> const Eigen::MatrixXd& {
    const auto it = mats.find(name);
    if (it == mats.end()) throw ParseError("archive: missing matrix " + name);
    return it->second;
  };

  std::vector<Point2> verts;
  const auto& V = get("mesh.vertices");
  for (Eigen::Index i = 0; i < V.rows(); ++i) verts.push_back({V(i, 0), V(i, 1)});
  std::vector<Triangle> tris;
  const auto& T = get("mesh.triangles");
  for (Eigen::Index i = 0; i < T.rows(); ++i)
    tris.push_back({{static_cast<int>(T(i, 0)), static_cast<int>(T(i, 1)), static_cast<int>(T(i, 2))}});
  TemporalSpec ts;
  ts.poly_degree = kv.get_int("basis.poly_degree", 3);
  ts.knots = kv.get_doubles("basis.knots");
  ts.fourier_harmonics = kv.get_int("basis.fourier_harmonics", 0);
  ts.period = kv.get_double("basis.period", 12.0);
  ts.normalize = kv.get_bool("basis.normalize", true);

  FittedModel m;
  m.bases = ModelBases::build(Triangulation(std::move(verts), std::move(tris)), kv.get_int("basis.degree", 3),
                              kv.get_int("basis.smoothness", 1), ts, kv.get_int("basis.horizon", 1));
  auto& cfg = m.config;
  cfg.J = kv.get_int("config.J", 2);
  cfg.p = kv.get_int("config.p", 1);
  cfg.penalties = {kv.get_double("config.mu_s", 0.0), kv.get_double("config.mu_t", 0.0), kv.get_double("config.pc", 0.0)};
  cfg.tol = kv.get_double("config.tol", 1e-6);
  cfg.max_iter = kv.get_int("config.max_iter", 200);
  cfg.freeze_K = kv.get_bool("config.freeze_K", false);
  cfg.stationary_init = kv.get_bool("config.stationary_init", false);
  cfg.init_ridge = kv.get_double("config.init_ridge", 1e-6);
  cfg.record_blocks = kv.get_bool("config.record_blocks", false);
  m.converged = kv.get_bool("fit.converged", false);
  m.iterations = kv.get_int("fit.iterations", 0);
  m.observation_count = kv.get_int("fit.observation_count", 0);
  const int nw = kv.get_int("fit.warnings", 0);
  for (int i = 0; i < nw; ++i) m.warnings.push_back(kv.get_string("fit.warning" + std::to_string(i), ""));

  auto& prm = m.params;
  prm.theta_b = get("params.theta_b").col(0);
  prm.theta_c = get("params.theta_c").col(0);
  prm.Theta = get("params.Theta");
  prm.K = get("params.K");
  prm.sigma2 = get("params.sigma2")(0, 0);
  prm.sigma_j2 = get("params.sigma_j2").col(0);

  const int J = kv.get_int("fit.moments_J", prm.J());
  const int p = kv.get_int("fit.moments_p", prm.p());
  auto& mo = m.moments;
  mo.J = J;
  mo.p = p;
  mo.alpha = get("moments.alpha");
  mo.Sigma = hsplit(get("moments.Sigma"), J);
  const auto lags = hsplit(get("moments.lag_cov"), J);
  if (static_cast<int>(lags.size()) != mo.n() * p || static_cast<int>(mo.Sigma.size()) != mo.n())
    throw ParseError("archive: moment blocks do not match the score matrix");
  mo.lag_cov.resize(static_cast<std::size_t>(mo.n()));
  for (int t = 0; t < mo.n(); ++t)
    for (int l = 0; l < p; ++l) mo.lag_cov[static_cast<std::size_t>(t)].push_back(lags[static_cast<std::size_t>(t * p + l)]);

  const auto& q = get("trace.q");
  m.q_trace.assign(q.data(), q.data() + q.size());
  const auto& ll = get("trace.loglik");
  m.loglik_trace.assign(ll.data(), ll.data() + ll.size());
  m.neg2_loglik = get("fit.neg2_loglik")(0, 0);
  m.final_state = get("fit.final_state").col(0);
  m.final_state_cov = get("fit.final_state_cov");
  return m;
}

}  // namespace sfpc
