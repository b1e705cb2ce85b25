// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "arcs/checks.hpp"
#include "arcs/engine.hpp"
#include "arcs/error.hpp"
#include "arcs/simulate.hpp"

using namespace arcs;
using engine::Method;
using simulate::Example;

namespace {

constexpr std::uint64_t kSeed = 42;

struct Runner {
    double rho = 0.9;
    std::size_t workers = 1;
    std::map<std::tuple<Example, Method, std::size_t, std::size_t>, simulate::ReplicationSummary>
        cache;

    const simulate::ReplicationSummary& get(Example ex, Method m, std::size_t n, std::size_t p,
                                            std::size_t reps) {
        auto key = std::make_tuple(ex, m, n, p);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        auto setup = simulate::example_setup(ex, n, p);
        engine::TrialConfig config;
        config.n = setup.n;
        config.p = setup.p;
        config.N0 = 30;
        config.N = 10;
        config.rho = rho;
        config.method = m;
        config.seed = kSeed;
        auto start = std::chrono::steady_clock::now();
        auto result = simulate::replicate(config, setup, reps, kSeed, workers);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        spdlog::info("example {} {} n={} p={} reps={}: {:.1f}s", simulate::example_name(ex),
                     engine::method_name(m), setup.n, setup.p, reps, secs);
        return cache.emplace(key, result.summary).first->second;
    }
};

struct Verdict {
    bool pass = true;
    std::string text;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!text.empty()) text += "; ";
        text += what + (ok ? "" : " [fail]");
    }
};

std::string f2(double v) { return fmt::format("{:.3f}", v); }

bool in(double v, double lo, double hi) { return v >= lo && v <= hi; }

Verdict criterion1(Runner& r) {
    Verdict v;
    auto cr = r.get(Example::ex1a, Method::cr, 120, 10, 500).imb_m;
    auto rr = r.get(Example::ex1a, Method::rr, 120, 10, 500).imb_m;
    auto arm = r.get(Example::ex1a, Method::arm, 120, 10, 500).imb_m;
    auto arcs = r.get(Example::ex1a, Method::arcs_m, 120, 10, 500).imb_m;
    v.check(in(cr, 5.0, 6.8), "CR Imb_M " + f2(cr) + " in [5.0, 6.8]");
    v.check(rr <= 1.5, "RR " + f2(rr) + " <= 1.5");
    v.check(in(arm, 0.4, 1.3), "ARM " + f2(arm) + " in [0.4, 1.3]");
    v.check(arcs <= 0.7, "ARCS-M " + f2(arcs) + " <= 0.7");
    return v;
}

Verdict criterion2(Runner& r) {
    Verdict v;
    auto arcs = r.get(Example::ex1b, Method::arcs_m, 120, 150, 200).imb_m;
    auto arm = r.get(Example::ex1b, Method::arm, 120, 150, 200).imb_m;
    v.check(arcs <= 0.8, "ARCS-M Imb_M " + f2(arcs) + " <= 0.8");
    v.check(arcs <= 0.25 * arm, "ratio to ARM " + f2(arcs / arm) + " <= 0.25");
    return v;
}

Verdict criterion3(Runner& r) {
    Verdict v;
    struct Item {
        Example ex;
        Method m;
        std::size_t p, reps;
    };
    const Item items[] = {
        {Example::ex1a, Method::cr, 10, 500},     {Example::ex1a, Method::rr, 10, 500},
        {Example::ex1a, Method::arm, 10, 500},    {Example::ex1a, Method::arcs_m, 10, 500},
        {Example::ex1b, Method::arm, 150, 200},   {Example::ex1b, Method::arcs_m, 150, 200},
    };
    for (const auto& it : items) {
        const auto& s = r.get(it.ex, it.m, 120, it.p, it.reps);
        std::string label = std::string(simulate::example_name(it.ex)) + " " +
                            std::string(engine::method_name(it.m));
        v.check(in(s.tau_mean, 0.95, 1.05), label + " tau " + f2(s.tau_mean));
        if (it.m == Method::cr)
            v.check(s.tau_sd_scaled >= 8.0, label + " sqrt(n) sd " + f2(s.tau_sd_scaled) + " >= 8");
        if (it.m == Method::arcs_m)
            v.check(s.tau_sd_scaled <= 3.6, label + " sqrt(n) sd " + f2(s.tau_sd_scaled) + " <= 3.6");
    }
    return v;
}

Verdict criterion4(Runner& r) {
    Verdict v;
    const auto& cov = r.get(Example::ex1b, Method::cov, 120, 150, 200);
    const auto& arcs = r.get(Example::ex1b, Method::arcs_cov, 120, 150, 200);
    v.check(arcs.imb_phi <= 0.30 * cov.imb_phi,
            "Imb_phi ratio " + f2(arcs.imb_phi / cov.imb_phi) + " <= 0.30");
    v.check(arcs.dncm <= 0.35 * cov.dncm, "DNCM ratio " + f2(arcs.dncm / cov.dncm) + " <= 0.35");
    return v;
}

Verdict criterion5(Runner& r) {
    Verdict v;
    for (auto m : {Method::arcs_m, Method::arcs_cov}) {
        const auto& s = r.get(Example::ex1b, m, 120, 150, 200);
        std::string label(engine::method_name(m));
        v.check(s.final_tpr >= 0.95, label + " TPR " + f2(s.final_tpr) + " >= 0.95");
        v.check(s.final_fpr <= 0.05, label + " FPR " + f2(s.final_fpr) + " <= 0.05");
    }
    return v;
}

Verdict criterion6(Runner& r) {
    Verdict v;
    const auto& s = r.get(Example::ex1a, Method::arcs_cov, 500, 10, 500);
    v.check(in(s.tau_sd_scaled, 2.0, 2.8),
            "ARCS-COV n=500 sqrt(n) sd " + f2(s.tau_sd_scaled) + " in [2.0, 2.8]");
    return v;
}

Verdict criterion7(Runner& r) {
    Verdict v;
    auto ratio = [&](Method m) {
        return r.get(Example::ex1a, m, 120, 10, 500).dncm / r.get(Example::ex1a, m, 60, 10, 500).dncm;
    };
    double cr = ratio(Method::cr);
    double arcs = ratio(Method::arcs_cov);
    v.check(cr >= 1.6, "CR DNCM ratio " + f2(cr) + " >= 1.6");
    v.check(arcs <= 1.25, "ARCS-COV DNCM ratio " + f2(arcs) + " <= 1.25");
    return v;
}

Verdict criterion8(Runner& r) {
    Verdict v;
    const auto& cov = r.get(Example::ex2, Method::cov, 120, 150, 200);
    const auto& arcs = r.get(Example::ex2, Method::arcs_cov, 120, 150, 200);
    v.check(arcs.imb_phi <= 0.35 * cov.imb_phi,
            "Imb_phi ratio " + f2(arcs.imb_phi / cov.imb_phi) + " <= 0.35");
    v.check(arcs.final_tpr >= 0.85, "TPR " + f2(arcs.final_tpr) + " >= 0.85");
    v.check(arcs.final_fpr <= 0.02, "FPR " + f2(arcs.final_fpr) + " <= 0.02");
    return v;
}

Verdict criterion9(Runner& r) {
    Verdict v;
    const auto& arm = r.get(Example::ex3, Method::arm, 300, 150, 200);
    const auto& madd = r.get(Example::ex3, Method::arcs_m_add, 300, 150, 200);
    const auto& cov = r.get(Example::ex4, Method::cov, 300, 150, 200);
    const auto& cadd = r.get(Example::ex4, Method::arcs_cov_add, 300, 150, 200);
    v.check(madd.imb_m <= 0.40 * arm.imb_m,
            "example 3 ARCS-M-add/ARM Imb_M " + f2(madd.imb_m / arm.imb_m) + " <= 0.40");
    v.check(cadd.dncm <= 0.40 * cov.dncm,
            "example 4 ARCS-COV-add/COV DNCM " + f2(cadd.dncm / cov.dncm) + " <= 0.40");
    return v;
}

Verdict criterion10(Runner&) {
    Verdict v;
    for (const auto& c : checks::run_all(kSeed))
        v.check(c.pass, fmt::format("{} {:.3g} (limit {:.3g})", c.name, c.value, c.limit));
    return v;
}

std::set<int> parse_list(const std::string& text) {
    std::set<int> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) out.insert(std::stoi(item));
    return out;
}

// Reference bands for single runs that are not acceptance criteria.
void print_examples(Runner& r) {
    struct Band {
        Example ex;
        Method m;
        std::size_t p;
        const char* metric;
        double lo, hi;
    };
    const Band bands[] = {{Example::ex1a, Method::cr, 10, "Imb_M", 5.0, 6.8},
                          {Example::ex1b, Method::arm, 150, "Imb_M", 3.0, 5.5},
                          {Example::ex1b, Method::cov, 150, "Imb_phi", 300.0, 560.0}};
    for (const auto& b : bands) {
        const auto& s = r.get(b.ex, b.m, 120, b.p, b.p == 10 ? 500 : 200);
        const double value = std::string(b.metric) == "Imb_M" ? s.imb_m : s.imb_phi;
        fmt::print("example {} {} {} {} in [{:g}, {:g}]: {}\n", simulate::example_name(b.ex),
                   engine::method_name(b.m), b.metric, f2(value), b.lo, b.hi,
                   in(value, b.lo, b.hi) ? "inside" : "outside");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria runner"};
    Runner runner;
    std::string only;
    std::size_t threads = 0;
    app.add_option("--rho", runner.rho, "biased-coin probability for every method");
    app.add_option("--threads", threads, "worker threads (0: all cores)");
    app.add_option("--criteria", only, "comma-separated subset, e.g. 1,2,10");
    bool examples = false;
    app.add_flag("--examples", examples, "also print reference bands (informational)");
    CLI11_PARSE(app, argc, argv);

    spdlog::set_default_logger(spdlog::stderr_color_mt("acceptance"));
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("ARCS_LOG");
    spdlog::set_level(env && std::string(env) == "info" ? spdlog::level::info : spdlog::level::warn);

    runner.workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    auto selected = parse_list(only);

    using Fn = Verdict (*)(Runner&);
    const Fn criteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                           criterion6, criterion7, criterion8, criterion9, criterion10};
    std::printf("seed %llu, rho %.2f, %zu workers\n", static_cast<unsigned long long>(kSeed),
                runner.rho, runner.workers);
    int failed = 0;
    for (int k = 1; k <= 10; ++k) {
        if (!selected.empty() && !selected.count(k)) continue;
        Verdict v;
        try {
            v = criteria[k - 1](runner);
        } catch (const Error& e) {
            v.pass = false;
            v.text = std::string(to_string(e.code())) + ": " + e.what();
        }
        if (!v.pass) ++failed;
        std::printf("criterion %d: %s  %s\n", k, v.pass ? "PASS" : "FAIL", v.text.c_str());
        std::fflush(stdout);
    }
    if (examples) print_examples(runner);
    return failed ? 1 : 0;
}
