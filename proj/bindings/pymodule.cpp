#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uma/optimizer.hpp"
#include "uma/simulator.hpp"

namespace py = pybind11;

namespace {

uma::SystemConfig make_system(long long K, int n, long long M_a, double b_s, double rho_s,
                              double rho_d_max, double P) {
    uma::SystemConfig cfg;
    cfg.K = K;
    cfg.n = n;
    cfg.M_a = M_a;
    cfg.b_s = b_s;
    cfg.rho_s = rho_s;
    cfg.rho_d_max = rho_d_max;
    cfg.P = P;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(pyuma, m) {
    m.doc() = "random-coding achievability bounds for unsourced multiple access with a "
              "common alarm message";

    m.def("log_gamma", &uma::log_gamma);
    m.def("upper_incomplete_gamma_reg", &uma::upper_incomplete_gamma_reg);
    m.def("binomial_pmf", &uma::binomial_pmf);
    m.def("chi_square_tail", &uma::chi_square_tail);
    m.def("gaussian_quadratic_mgf", &uma::gaussian_quadratic_mgf);
    m.def("rho_d_floor", &uma::rho_d_floor);
    m.def("ebno_alarm_homa", &uma::ebno_alarm_homa);
    m.def("ebno_std_homa", &uma::ebno_std_homa);
    m.def("select_pprime", &uma::select_pprime);
    m.def("select_k_limits", &uma::select_k_limits);

    py::class_<uma::SystemConfig>(m, "SystemConfig")
        .def(py::init(&make_system), py::arg("K"), py::arg("n"), py::arg("M_a") = 8,
             py::arg("b_s") = 100.0, py::arg("rho_s") = 0.01, py::arg("rho_d_max") = 1.0,
             py::arg("P") = 1.0)
        .def_readwrite("K", &uma::SystemConfig::K)
        .def_readwrite("n", &uma::SystemConfig::n)
        .def_readwrite("eps_amd_target", &uma::SystemConfig::eps_amd_target)
        .def_readwrite("eps_afp_target", &uma::SystemConfig::eps_afp_target)
        .def_readwrite("eps_smd_target", &uma::SystemConfig::eps_smd_target)
        .def_readwrite("eps_sfp_target", &uma::SystemConfig::eps_sfp_target);

    py::class_<uma::McSettings>(m, "McSettings")
        .def(py::init<>())
        .def_readwrite("samples", &uma::McSettings::samples)
        .def_readwrite("confidence", &uma::McSettings::confidence)
        .def_readwrite("seed", &uma::McSettings::seed)
        .def_readwrite("workers", &uma::McSettings::workers);

    py::class_<uma::EbnoStarResult>(m, "EbnoStarResult")
        .def_readonly("ebno_db", &uma::EbnoStarResult::ebno_db)
        .def_readonly("P_s", &uma::EbnoStarResult::P_s);

    py::class_<uma::NsMinResult>(m, "NsMinResult")
        .def_readonly("n_s_min", &uma::NsMinResult::n_s_min)
        .def_readonly("n_a_max", &uma::NsMinResult::n_a_max);

    m.def("ebno_s_star",
          [](long long K, const uma::SystemConfig& cfg, const uma::McSettings& mc) {
              return uma::ebno_s_star(K, cfg, mc);
          });
    m.def("find_ns_min", [](double delta_db, long long K, const uma::SystemConfig& cfg,
                            const uma::McSettings& mc) {
        return uma::find_ns_min(delta_db, K, cfg, mc);
    });

    py::enum_<uma::KaProbeMode>(m, "KaProbeMode")
        .value("adjacent_over", uma::KaProbeMode::adjacent_over)
        .value("full_argmin", uma::KaProbeMode::full_argmin);

    m.def(
        "ka_estimation_error_prob",
        [](int n, int K_s, double psi_db, double P_s, int K_a, std::uint64_t trials,
           std::uint64_t seed, uma::KaProbeMode mode) {
            uma::McSettings mc;
            mc.seed = seed;
            auto e = uma::ka_estimation_error_prob(n, K_s, psi_db, P_s, K_a, trials, mc, mode);
            return py::make_tuple(e.mean, e.lower, e.upper);
        },
        py::arg("n"), py::arg("K_s"), py::arg("psi_db"), py::arg("P_s"), py::arg("K_a"),
        py::arg("trials"), py::arg("seed") = 1,
        py::arg("mode") = uma::KaProbeMode::adjacent_over);
}
