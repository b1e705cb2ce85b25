#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "arcs/balance.hpp"
#include "arcs/engine.hpp"
#include "arcs/error.hpp"
#include "arcs/numerics.hpp"
#include "arcs/selection.hpp"
#include "arcs/simulate.hpp"

namespace py = pybind11;
using namespace arcs;

namespace {

engine::Method method_of(const std::string& name) {
    auto m = engine::parse_method(name);
    if (!m) fail(ErrorCode::config, "unknown method '" + name + "'");
    return *m;
}

simulate::Example example_of(const std::string& name) {
    auto e = simulate::parse_example(name);
    if (!e || *e == simulate::Example::calibrated)
        fail(ErrorCode::config, "unknown example '" + name + "'");
    return *e;
}

engine::TrialConfig make_config(const simulate::ExampleSetup& setup, const std::string& method,
                                double rho, std::size_t N0, std::size_t N) {
    engine::TrialConfig c;
    c.method = method_of(method);
    c.n = setup.n;
    c.p = setup.p;
    c.rho = rho;
    c.N0 = N0;
    c.N = N;
    return c;
}

py::dict metrics_dict(const balance::RunMetrics& m) {
    py::dict d;
    d["imb_m"] = m.imb_m;
    d["dncm"] = m.dncm;
    d["dnc"] = m.dnc;
    d["imb_phi"] = m.imb_phi;
    d["tau_hat"] = m.tau_hat;
    d["tpr"] = m.tpr;
    d["fpr"] = m.fpr;
    d["n1"] = m.n1;
    d["n0"] = m.n0;
    return d;
}

py::dict summary_dict(const simulate::ReplicationSummary& s) {
    py::dict d;
    d["method"] = std::string(engine::method_name(s.method));
    d["example"] = std::string(simulate::example_name(s.example));
    d["n"] = s.n;
    d["p"] = s.p;
    d["batch_size"] = s.N;
    d["reps"] = s.reps;
    d["failures"] = s.failures;
    d["imb_m"] = s.imb_m;
    d["dncm"] = s.dncm;
    d["dnc"] = s.dnc;
    d["imb_phi"] = s.imb_phi;
    d["tau_mean"] = s.tau_mean;
    d["tau_sd_scaled"] = s.tau_sd_scaled;
    if (s.has_selection) {
        d["tpr_by_batch"] = s.tpr_by_batch;
        d["fpr_by_batch"] = s.fpr_by_batch;
        d["final_tpr"] = s.final_tpr;
        d["final_fpr"] = s.final_fpr;
    }
    return d;
}

std::vector<std::vector<std::size_t>> history(const std::vector<SelectedSet>& sets) {
    std::vector<std::vector<std::size_t>> out;
    for (const auto& s : sets) out.push_back(s.indices());
    return out;
}

}  // namespace

PYBIND11_MODULE(_arcs, m) {
    m.doc() = "Covariate-adaptive randomization with online covariate selection";

    static py::exception<Error> error(m, "ArcsError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
        }
    });

    m.def("methods", [] {
        std::vector<std::string> out;
        for (auto method : engine::all_methods()) out.emplace_back(engine::method_name(method));
        return out;
    });

    m.def(
        "simulate",
        [](const std::string& example, const std::string& method, std::size_t n, std::size_t p,
           std::size_t reps, std::uint64_t seed, double rho, std::size_t N0, std::size_t N,
           std::size_t workers) {
            auto setup = simulate::example_setup(example_of(example), n, p);
            auto config = make_config(setup, method, rho, N0, N);
            config.seed = seed;
            simulate::ReplicationResult result;
            {
                py::gil_scoped_release release;
                result = simulate::replicate(config, setup, reps, seed, workers);
            }
            py::dict d = summary_dict(result.summary);
            py::list per_rep;
            for (const auto& r : result.records) {
                py::dict row = r.ok ? metrics_dict(r.metrics) : py::dict();
                row["rep"] = r.rep;
                row["ok"] = r.ok;
                if (!r.ok) row["error"] = r.error;
                per_rep.append(row);
            }
            d["per_rep"] = per_rep;
            return d;
        },
        py::arg("example"), py::arg("method"), py::arg("n") = 0, py::arg("p") = 0,
        py::arg("reps") = 100, py::arg("seed") = 42, py::arg("rho") = 0.85, py::arg("N0") = 30,
        py::arg("N") = 10, py::arg("workers") = 1);

    m.def(
        "run_trial",
        [](const std::string& example, const std::string& method, std::size_t n, std::size_t p,
           std::uint64_t seed, std::size_t rep, double rho, std::size_t N0, std::size_t N) {
            auto setup = simulate::example_setup(example_of(example), n, p);
            auto config = make_config(setup, method, rho, N0, N);
            config.seed = seed;
            auto run = simulate::run_replication(config, setup, seed, rep);
            py::dict d;
            d["covariates"] = run.covariates;
            d["assignments"] = run.state.assignments;
            d["outcomes"] = run.state.outcomes;
            d["selection_history"] = history(run.state.selection_history);
            d["true_set"] = setup.true_set.indices();
            d["metrics"] = metrics_dict(run.metrics);
            return d;
        },
        py::arg("example"), py::arg("method"), py::arg("n") = 0, py::arg("p") = 0,
        py::arg("seed") = 42, py::arg("rep") = 0, py::arg("rho") = 0.85, py::arg("N0") = 30,
        py::arg("N") = 10);

    m.def(
        "lasso_fit",
        [](const Matrix& X, const Vector& y, double lambda) {
            auto fit = selection::lasso_fit(X, y, lambda);
            py::dict d;
            d["intercept"] = fit.intercept;
            d["coefficients"] = fit.coefficients;
            d["support"] = selection::support(fit).indices();
            return d;
        },
        py::arg("X"), py::arg("y"), py::arg("lam"));
    m.def("lasso_lambda_max", [](const Matrix& X, const Vector& y) {
        return selection::lasso_lambda_max(X, y);
    });

    m.def(
        "phi_cov",
        [](const Vector& x, double w0, double w1, double w2) {
            return balance::phi_cov(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                                    balance::PhiSpec::cov(w0, w1, w2));
        },
        py::arg("x"), py::arg("w0") = 1.0 / 3.0, py::arg("w1") = 1.0 / 3.0,
        py::arg("w2") = 1.0 / 3.0);
    m.def("mahalanobis_imb", [](const Matrix& X, const std::vector<int>& assignments) {
        return balance::mahalanobis_imb(X, assignments);
    });
    m.def("pinv", [](const Matrix& A) { return numerics::pinv(A); });
    m.def("rr_threshold", &engine::rr_threshold, py::arg("p"), py::arg("prob") = 0.001);
    m.def("coin_probability", &engine::coin_probability, py::arg("delta"), py::arg("rho"),
          py::arg("tie") = false);
}
