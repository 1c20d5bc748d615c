#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sfpc/archive.hpp"
#include "sfpc/bootstrap.hpp"
#include "sfpc/error.hpp"
#include "sfpc/model_selection.hpp"
#include "sfpc/parallel.hpp"
#include "sfpc/simulation.hpp"

namespace py = pybind11;
using namespace sfpc;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<Point2> to_points(const RowMat& xy) {
  if (xy.cols() != 2) throw ArgumentError("points must be an (m, 2) array");
  std::vector<Point2> pts(static_cast<std::size_t>(xy.rows()));
  for (Eigen::Index i = 0; i < xy.rows(); ++i) pts[static_cast<std::size_t>(i)] = {xy(i, 0), xy(i, 1)};
  return pts;
}

RowMat from_points(const std::vector<Point2>& pts) {
  RowMat m(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) << pts[i].x, pts[i].y;
  return m;
}

Triangulation make_mesh(const RowMat& vertices, const Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>& tris) {
  std::vector<Triangle> t(static_cast<std::size_t>(tris.rows()));
  for (Eigen::Index i = 0; i < tris.rows(); ++i) t[static_cast<std::size_t>(i)] = Triangle{{tris(i, 0), tris(i, 1), tris(i, 2)}};
  return Triangulation(to_points(vertices), std::move(t));
}

// Long-format arrays -> panel over times 0..max(t). Rows outside the mesh raise.
RawPanel to_raw(const Eigen::VectorXi& t, const RowMat& xy, const Eigen::VectorXd& value) {
  if (t.size() != xy.rows() || t.size() != value.size()) throw ArgumentError("t, xy and value lengths differ");
  if (t.size() == 0) throw ArgumentError("no observations");
  if (t.minCoeff() < 0) throw ArgumentError("time indices must be non-negative");
  RawPanel raw;
  const auto n = static_cast<std::size_t>(t.maxCoeff() + 1);
  raw.locations.resize(n);
  std::vector<std::vector<double>> v(n);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    raw.locations[static_cast<std::size_t>(t[i])].push_back({xy(i, 0), xy(i, 1)});
    v[static_cast<std::size_t>(t[i])].push_back(value[i]);
  }
  raw.values.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    raw.values[k] = Eigen::Map<const Eigen::VectorXd>(v[k].data(), static_cast<Eigen::Index>(v[k].size()));
  return raw;
}

struct Model {
  FittedModel fit;
  std::optional<ObservationPanel> panel;  // absent for archives loaded from disk
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Serially correlated functional PCA on triangulated domains";

  // later registrations are tried first
  py::register_exception<Error>(m, "SfpcError", PyExc_RuntimeError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);

  py::class_<Triangulation>(m, "Mesh")
      .def(py::init(&make_mesh), py::arg("vertices"), py::arg("triangles"))
      .def_static("from_file", &Triangulation::from_file)
      .def_property_readonly("vertices", [](const Triangulation& t) { return from_points(t.vertices()); })
      .def_property_readonly("triangles",
                             [](const Triangulation& t) {
                               Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor> a(
                                   static_cast<Eigen::Index>(t.num_triangles()), 3);
                               for (std::size_t i = 0; i < t.num_triangles(); ++i)
                                 for (int c = 0; c < 3; ++c) a(static_cast<Eigen::Index>(i), c) = t.triangles()[i].v[c];
                               return a;
                             })
      .def_property_readonly("area", &Triangulation::total_area)
      .def("contains", [](const Triangulation& t, const RowMat& xy) {
        const auto pts = to_points(xy);
        std::vector<bool> out;
        for (const auto& p : pts) out.push_back(t.contains(p));
        return out;
      });

  m.def("square_hole_mesh", &square_hole_mesh);
  m.def("eval_grid", [] { return from_points(eval_grid()); });
  m.def("truth_pcs", [](const RowMat& xy) { return truth_pcs(to_points(xy)); });
  m.def("principal_angle", &principal_angle, py::arg("v_hat"), py::arg("v"));
  m.def("miae", &miae, py::arg("est"), py::arg("truth"), py::arg("area"));
  m.def("split_seed", &split_seed);

  m.def(
      "simulate",
      [](const std::string& setup, int level, int n, std::uint64_t seed) {
        SimSetup s;
        s.setup = parse_setup(setup);
        s.variance_level = level;
        s.n = n;
        s.seed = seed;
        const SimData d = generate(s);
        const long total = d.raw.total();
        Eigen::VectorXi t(total);
        RowMat xy(total, 2);
        Eigen::VectorXd v(total);
        long k = 0;
        for (int i = 0; i < d.raw.n(); ++i)
          for (std::size_t j = 0; j < d.raw.locations[static_cast<std::size_t>(i)].size(); ++j, ++k) {
            t[k] = i;
            xy.row(k) << d.raw.locations[static_cast<std::size_t>(i)][j].x, d.raw.locations[static_cast<std::size_t>(i)][j].y;
            v[k] = d.raw.values[static_cast<std::size_t>(i)][static_cast<Eigen::Index>(j)];
          }
        py::dict out;
        out["t"] = t;
        out["xy"] = xy;
        out["value"] = v;
        out["scores"] = d.scores;
        return out;
      },
      py::arg("setup") = "i", py::arg("level") = 0, py::arg("n") = 500, py::arg("seed") = 1,
      "One synthetic data set in long format (0-based t, xy, value) plus the true scores.");

  py::class_<Model>(m, "Model")
      .def_property_readonly("theta_b", [](const Model& a) { return a.fit.params.theta_b; })
      .def_property_readonly("theta_c", [](const Model& a) { return a.fit.params.theta_c; })
      .def_property_readonly("Theta", [](const Model& a) { return a.fit.params.Theta; })
      .def_property_readonly("K", [](const Model& a) { return a.fit.params.K; })
      .def_property_readonly("sigma2", [](const Model& a) { return a.fit.params.sigma2; })
      .def_property_readonly("sigma_j2", [](const Model& a) { return a.fit.params.sigma_j2; })
      .def_property_readonly("scores", [](const Model& a) { return a.fit.moments.alpha; })
      .def_property_readonly("q_trace", [](const Model& a) { return a.fit.q_trace; })
      .def_property_readonly("neg2_loglik", [](const Model& a) { return a.fit.neg2_loglik; })
      .def_property_readonly("iterations", [](const Model& a) { return a.fit.iterations; })
      .def_property_readonly("converged", [](const Model& a) { return a.fit.converged; })
      .def_property_readonly("warnings", [](const Model& a) { return a.fit.warnings; })
      .def("pcs", [](const Model& a, const RowMat& xy) {
        return Eigen::MatrixXd(a.fit.bases->spatial.eval_design(to_points(xy)) * a.fit.params.Theta);
      })
      .def("mean", [](const Model& a, double time, const RowMat& xy) { return mean_surface(a.fit, time, to_points(xy)); },
           py::arg("time"), py::arg("xy"), "Mean surface at a 1-based time.")
      .def("reconstruct", [](const Model& a, int t, const RowMat& xy) { return reconstruct(a.fit, t, to_points(xy)); },
           py::arg("t"), py::arg("xy"), "Fitted surface at a 0-based time.")
      .def(
          "forecast",
          [](const Model& a, int horizon, const RowMat& xy) {
            const Forecast f = forecast(a.fit, horizon, to_points(xy));
            Eigen::MatrixXd mean(f.mean.front().size(), horizon), sd(f.sd.front().size(), horizon);
            for (int h = 0; h < horizon; ++h) {
              mean.col(h) = f.mean[static_cast<std::size_t>(h)];
              sd.col(h) = f.sd[static_cast<std::size_t>(h)];
            }
            return py::make_tuple(mean, sd);
          },
          py::arg("horizon"), py::arg("xy"))
      .def("criterion",
           [](const Model& a, const std::string& c) { return information_criterion(a.fit, parse_criterion(c)); })
      .def(
          "bootstrap_sd",
          [](const Model& a, const RowMat& xy, int replicates, std::uint64_t seed) {
            if (!a.panel) throw ArgumentError("bootstrap needs the data the model was fitted to");
            BootstrapConfig c;
            c.replicates = replicates;
            c.seed = seed;
            c.grid = to_points(xy);
            py::gil_scoped_release nogil;
            return bootstrap_sd(a.fit, *a.panel, c).sd;
          },
          py::arg("xy"), py::arg("replicates") = 100, py::arg("seed") = 1)
      .def("save", [](const Model& a, const std::string& dir) { save_model(a.fit, dir); });

  m.def(
      "fit",
      [](const Eigen::VectorXi& t, const RowMat& xy, const Eigen::VectorXd& value, const Triangulation& mesh, int J,
         int p, std::tuple<double, double, double> penalties, int degree, int smoothness, int poly_degree,
         int fourier_harmonics, double period, bool freeze_K, int max_iter, double tol) {
        TemporalSpec ts;
        ts.poly_degree = poly_degree;
        ts.fourier_harmonics = fourier_harmonics;
        ts.period = period;
        RawPanel raw = to_raw(t, xy, value);
        const auto bases = ModelBases::build(mesh, degree, smoothness, ts, raw.n());
        Model out{{}, ObservationPanel::build(std::move(raw), bases->spatial, bases->temporal)};
        FitConfig cfg;
        cfg.J = J;
        cfg.p = freeze_K ? 1 : p;
        cfg.freeze_K = freeze_K;
        cfg.penalties = {std::get<0>(penalties), std::get<1>(penalties), std::get<2>(penalties)};
        cfg.max_iter = max_iter;
        cfg.tol = tol;
        py::gil_scoped_release nogil;
        out.fit = sfpc::fit(*out.panel, bases, cfg);
        return out;
      },
      py::arg("t"), py::arg("xy"), py::arg("value"), py::arg("mesh"), py::arg("J") = 2, py::arg("p") = 2,
      py::arg("penalties") = std::make_tuple(1e-4, 1e-4, 1.0), py::arg("degree") = 3, py::arg("smoothness") = 1,
      py::arg("poly_degree") = 3, py::arg("fourier_harmonics") = 5, py::arg("period") = 12.0,
      py::arg("freeze_K") = false, py::arg("max_iter") = 200, py::arg("tol") = 1e-6,
      "Fits the model to long-format data with 0-based time indices.");

  m.def("load_model", [](const std::string& dir) { return Model{load_model(dir), std::nullopt}; });
}
