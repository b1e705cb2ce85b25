#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "arcs/cli.hpp"
#include "arcs/error.hpp"

namespace arcs::cli {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, sep)) {
        auto first = item.find_first_not_of(" \t");
        auto last = item.find_last_not_of(" \t");
        out.push_back(first == std::string::npos ? "" : item.substr(first, last - first + 1));
    }
    return out;
}

std::string where(const std::string& key, const std::string& origin) {
    return "key '" + key + "' in " + origin;
}

std::uint64_t get_uint(const json& v, const std::string& key, const std::string& origin) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
    fail(ErrorCode::config, where(key, origin) + ": expected a non-negative integer, got " + v.dump());
}

double get_real(const json& v, const std::string& key, const std::string& origin) {
    require(v.is_number(), ErrorCode::config,
            where(key, origin) + ": expected a number, got " + v.dump());
    return v.get<double>();
}

std::string get_string(const json& v, const std::string& key, const std::string& origin) {
    require(v.is_string(), ErrorCode::config,
            where(key, origin) + ": expected a string, got " + v.dump());
    return v.get<std::string>();
}

std::vector<std::string> get_list(const json& v, const std::string& key,
                                  const std::string& origin) {
    if (v.is_string()) return split(v.get<std::string>(), ',');
    require(v.is_array(), ErrorCode::config,
            where(key, origin) + ": expected a list or comma-separated string");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(get_string(v[i], key + "[" + std::to_string(i) + "]", origin));
    return out;
}

std::optional<std::size_t> get_optional_count(const json& v, const std::string& key,
                                              const std::string& origin) {
    if (v.is_null()) return std::nullopt;
    return static_cast<std::size_t>(get_uint(v, key, origin));
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "example", "methods", "n",     "p",    "N0",      "N",          "rho",
        "weights", "cv_folds", "cv_rule", "rr_accept_prob", "reps", "seed", "threads",
        "out",     "form",    "data",  "outcome", "covariates", "arm_column"};
    return keys;
}

std::vector<engine::Method> parse_method_list(const std::string& text) {
    std::vector<engine::Method> out;
    for (const auto& name : split(text, ',')) {
        if (name.empty()) continue;
        auto m = engine::parse_method(name);
        require(m.has_value(), ErrorCode::config, "unknown method '" + name + "'");
        out.push_back(*m);
    }
    return out;
}

std::array<double, 3> parse_weights(const std::string& text) {
    auto parts = split(text, ',');
    require(parts.size() == 3, ErrorCode::config,
            "weights: expected three comma-separated values w0,w1,w2, got '" + text + "'");
    std::array<double, 3> w{};
    for (std::size_t i = 0; i < 3; ++i) {
        std::size_t used = 0;
        try {
            w[i] = std::stod(parts[i], &used);
        } catch (const std::exception&) {
            used = 0;
        }
        require(used == parts[i].size() && used > 0, ErrorCode::config,
                "weights: '" + parts[i] + "' is not a number");
    }
    return w;
}

ExperimentSpec merge_json(ExperimentSpec spec, const json& j, const std::string& origin) {
    require(j.is_object(), ErrorCode::config, origin + ": expected a JSON object");
    const auto& keys = config_keys();
    for (const auto& [key, v] : j.items()) {
        require(std::find(keys.begin(), keys.end(), key) != keys.end(), ErrorCode::config,
                "unknown key '" + key + "' in " + origin);
        if (key == "example") {
            auto name = get_string(v, key, origin);
            auto e = simulate::parse_example(name);
            require(e.has_value(), ErrorCode::config,
                    where(key, origin) + ": unknown example '" + name + "'");
            spec.example = *e;
        } else if (key == "methods") {
            spec.methods.clear();
            for (const auto& name : get_list(v, key, origin)) {
                auto m = engine::parse_method(name);
                require(m.has_value(), ErrorCode::config,
                        where(key, origin) + ": unknown method '" + name + "'");
                spec.methods.push_back(*m);
            }
        } else if (key == "n") {
            spec.n = get_optional_count(v, key, origin);
        } else if (key == "p") {
            spec.p = get_optional_count(v, key, origin);
        } else if (key == "N0") {
            spec.N0 = static_cast<std::size_t>(get_uint(v, key, origin));
        } else if (key == "N") {
            spec.N = get_optional_count(v, key, origin);
        } else if (key == "rho") {
            spec.rho = get_real(v, key, origin);
        } else if (key == "weights") {
            if (v.is_string()) {
                spec.weights = parse_weights(v.get<std::string>());
            } else {
                require(v.is_array() && v.size() == 3, ErrorCode::config,
                        where(key, origin) + ": expected three numbers");
                for (std::size_t i = 0; i < 3; ++i)
                    spec.weights[i] = get_real(v[i], key + "[" + std::to_string(i) + "]", origin);
            }
        } else if (key == "cv_folds") {
            spec.cv_folds = static_cast<std::size_t>(get_uint(v, key, origin));
        } else if (key == "cv_rule") {
            spec.cv_rule = lower(get_string(v, key, origin));
        } else if (key == "rr_accept_prob") {
            spec.rr_accept_prob = get_real(v, key, origin);
        } else if (key == "reps") {
            spec.reps = static_cast<std::size_t>(get_uint(v, key, origin));
        } else if (key == "seed") {
            spec.seed = get_uint(v, key, origin);
        } else if (key == "threads") {
            spec.threads = static_cast<std::size_t>(get_uint(v, key, origin));
        } else if (key == "out") {
            spec.out = get_string(v, key, origin);
        } else if (key == "form") {
            spec.form = lower(get_string(v, key, origin));
        } else if (key == "data") {
            spec.data = get_string(v, key, origin);
        } else if (key == "outcome") {
            spec.outcome = get_string(v, key, origin);
        } else if (key == "covariates") {
            spec.covariates = get_list(v, key, origin);
        } else if (key == "arm_column") {
            spec.arm_column = get_string(v, key, origin);
        }
    }
    return spec;
}

ExperimentSpec parse_config_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io, "cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::config, path + ": invalid JSON: " + e.what());
    }
    return merge_json(ExperimentSpec{}, j, path);
}

json to_json(const ExperimentSpec& raw) {
    ExperimentSpec spec = normalize(raw);
    json j;
    j["example"] = std::string(simulate::example_name(spec.example));
    json methods = json::array();
    for (auto m : spec.methods) methods.push_back(std::string(engine::method_name(m)));
    j["methods"] = methods;
    auto opt = [](const std::optional<std::size_t>& v) -> json {
        return v ? json(*v) : json(nullptr);
    };
    j["n"] = opt(spec.n);
    j["p"] = opt(spec.p);
    j["N0"] = spec.N0;
    j["N"] = opt(spec.N);
    j["rho"] = spec.rho;
    j["weights"] = {spec.weights[0], spec.weights[1], spec.weights[2]};
    j["cv_folds"] = spec.cv_folds;
    j["cv_rule"] = spec.cv_rule;
    j["rr_accept_prob"] = spec.rr_accept_prob;
    j["reps"] = spec.reps;
    j["seed"] = spec.seed;
    j["threads"] = spec.threads;
    j["out"] = spec.out;
    j["form"] = spec.form;
    j["data"] = spec.data;
    j["outcome"] = spec.outcome;
    j["covariates"] = spec.covariates;
    j["arm_column"] = spec.arm_column;
    return j;
}

std::size_t default_batch_size(simulate::Example example) {
    // (376 - 30) is not a multiple of 10.
    return example == simulate::Example::calibrated ? 2 : 10;
}

ExperimentSpec normalize(ExperimentSpec spec) {
    if (spec.example != simulate::Example::calibrated) {
        auto [n, p] = simulate::example_dimensions(spec.example);
        if (!spec.n) spec.n = n;
        if (!spec.p) spec.p = p;
    }
    if (!spec.N) spec.N = default_batch_size(spec.example);
    return spec;
}

engine::TrialConfig trial_config(const ExperimentSpec& raw, engine::Method method,
                                 std::size_t n, std::size_t p) {
    ExperimentSpec spec = normalize(raw);
    engine::TrialConfig c;
    c.n = n ? n : spec.n.value_or(0);
    c.p = p ? p : spec.p.value_or(0);
    c.N0 = spec.N0;
    c.N = *spec.N;
    c.rho = spec.rho;
    c.phi = balance::PhiSpec::cov(spec.weights[0], spec.weights[1], spec.weights[2]);
    c.method = method;
    c.selection.cv.folds = spec.cv_folds;
    c.selection.cv.rule =
        spec.cv_rule == "one-se" ? selection::CvRule::one_se : selection::CvRule::lambda_min;
    c.rr_accept_prob = spec.rr_accept_prob;
    c.seed = spec.seed;
    return c;
}

void validate(const ExperimentSpec& raw) {
    ExperimentSpec spec = normalize(raw);
    require(!spec.methods.empty(), ErrorCode::config, "methods: at least one method is required");
    std::set<engine::Method> seen;
    for (auto m : spec.methods)
        require(seen.insert(m).second, ErrorCode::config,
                "methods: '" + std::string(engine::method_name(m)) + "' is listed twice");
    require(spec.reps >= 1, ErrorCode::config, "reps must be at least 1");
    require(spec.cv_folds >= 2, ErrorCode::config, "cv_folds must be at least 2");
    require(spec.cv_rule == "lambda-min" || spec.cv_rule == "one-se", ErrorCode::config,
            "cv_rule must be 'lambda-min' or 'one-se', got '" + spec.cv_rule + "'");
    require(simulate::parse_form(spec.form).has_value(), ErrorCode::config,
            "form must be 'linear' or 'quadratic', got '" + spec.form + "'");
    balance::PhiSpec::cov(spec.weights[0], spec.weights[1], spec.weights[2]).validate();
    if (spec.example == simulate::Example::calibrated) {
        require(!spec.data.empty(), ErrorCode::config,
                "the calibrated example needs a data file (--data)");
        require(!spec.covariates.empty(), ErrorCode::config,
                "covariates: at least one model covariate is required");
        // n and p come from the data; the remaining checks run in run_study.
        if (!spec.n || !spec.p) return;
    }
    for (auto m : spec.methods) trial_config(spec, m).validate();
}

}  // namespace arcs::cli
