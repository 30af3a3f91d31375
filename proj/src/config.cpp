#include "streamopt/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace streamopt {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what)
{
    throw ConfigError(where + ": " + what);
}

const json* find(const json& j, const std::string& key)
{
    const auto it = j.find(key);
    return it == j.end() || it->is_null() ? nullptr : &*it;
}

double number(const json& v, const std::string& where)
{
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "infinity") {
            return std::numeric_limits<double>::infinity();
        }
    }
    if (!v.is_number()) {
        fail(where, "expected a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
        fail(where, "expected a finite number");
    }
    return x;
}

std::uint64_t unsigned_integer(const json& v, const std::string& where)
{
    if (v.is_number_unsigned()) {
        return v.get<std::uint64_t>();
    }
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    if (v.is_number_float()) {
        const double x = v.get<double>();
        if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) {
            return static_cast<std::uint64_t>(x);
        }
    }
    fail(where, "expected a nonnegative integer");
}

bool boolean(const json& v, const std::string& where)
{
    if (!v.is_boolean()) {
        fail(where, "expected true or false");
    }
    return v.get<bool>();
}

std::string string(const json& v, const std::string& where)
{
    if (!v.is_string()) {
        fail(where, "expected a string");
    }
    return v.get<std::string>();
}

Vec vector(const json& v, const std::string& where)
{
    if (!v.is_array() || v.empty()) {
        fail(where, "expected a nonempty array of numbers");
    }
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = number(v[i], where + "[" + std::to_string(i) + "]");
    }
    return out;
}

std::array<double, 2> range(const json& v, const std::string& where)
{
    const Vec r = vector(v, where);
    if (r.size() != 2 || !(r(0) <= r(1))) {
        fail(where, "expected [low, high] with low <= high");
    }
    return {r(0), r(1)};
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!j.is_object()) {
        fail(where, "expected an object");
    }
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!keys.count(key)) {
            fail(where + "." + key, "unknown field");
        }
    }
}

InnovationSpec parse_innovation(const json& j, const std::string& where)
{
    if (j.is_string()) {
        return parse_innovation(json{{"kind", j}}, where);
    }
    check_keys(j, where, {"kind", "df", "hurst"});
    InnovationSpec spec;
    const json* kind = find(j, "kind");
    if (!kind) {
        fail(where + ".kind", "missing");
    }
    const std::string k = string(*kind, where + ".kind");
    if (k == "gaussian") {
        spec.kind = InnovationSpec::Kind::gaussian;
    } else if (k == "student_t") {
        spec.kind = InnovationSpec::Kind::student_t;
    } else if (k == "fgn_student_t") {
        spec.kind = InnovationSpec::Kind::fgn_student_t;
    } else {
        fail(where + ".kind", "unknown innovation '" + k + "'");
    }
    if (const json* v = find(j, "df")) {
        spec.df = number(*v, where + ".df");
    } else if (spec.kind == InnovationSpec::Kind::student_t) {
        fail(where + ".df", "required for student_t");
    }
    if (const json* v = find(j, "hurst")) {
        spec.hurst = number(*v, where + ".hurst");
    }
    if (spec.kind == InnovationSpec::Kind::student_t && !(spec.df > 4.0)) {
        fail(where + ".df", "must exceed 4");
    }
    if (spec.kind == InnovationSpec::Kind::fgn_student_t) {
        if (std::isfinite(spec.df) && !(spec.df > 4.0)) {
            fail(where + ".df", "must exceed 4");
        }
        if (!(spec.hurst > 0.0 && spec.hurst < 1.0)) {
            fail(where + ".hurst", "must lie in (0, 1)");
        }
    }
    return spec;
}

ProjectionSpec parse_projection(const json& j, const std::string& where)
{
    check_keys(j, where, {"kind", "center", "radius", "lower", "upper"});
    const json* kind = find(j, "kind");
    const std::string k = kind ? string(*kind, where + ".kind") : "none";
    ProjectionSpec spec;
    if (k == "none") {
        return spec;
    }
    try {
        if (k == "ball") {
            const json* c = find(j, "center");
            const json* r = find(j, "radius");
            if (!c || !r) {
                fail(where, "ball needs center and radius");
            }
            return ProjectionSpec::ball(vector(*c, where + ".center"), number(*r, where + ".radius"));
        }
        if (k == "box") {
            const json* lo = find(j, "lower");
            const json* hi = find(j, "upper");
            if (!lo || !hi) {
                fail(where, "box needs lower and upper");
            }
            return ProjectionSpec::box(vector(*lo, where + ".lower"), vector(*hi, where + ".upper"));
        }
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind(where, 0) == 0) {
            throw;
        }
        fail(where, msg);
    }
    fail(where + ".kind", "unknown projection '" + k + "'");
}

ModelKind parse_model_kind(const std::string& k, const std::string& where)
{
    if (k == "ar1") {
        return ModelKind::ar1;
    }
    if (k == "ma1") {
        return ModelKind::ma1;
    }
    if (k == "arch1") {
        return ModelKind::arch1;
    }
    if (k == "ar1_arch1") {
        return ModelKind::ar1_arch1;
    }
    if (k == "median") {
        return ModelKind::median;
    }
    fail(where, "unknown model '" + k + "'");
}

ModelConfig parse_model(const json& j)
{
    const std::string where = "model";
    check_keys(j, where,
               {"kind", "innovation", "theta_star", "theta_star_range", "phi_star", "alpha0", "alpha1",
                "alpha1_range", "alpha0_init", "freeze_alpha0", "init_radius", "projection", "dimension",
                "center_range", "csv", "step_sqrt_dim"});
    ModelConfig m;
    const json* kind = find(j, "kind");
    if (!kind) {
        fail(where + ".kind", "missing");
    }
    m.kind = parse_model_kind(string(*kind, where + ".kind"), where + ".kind");
    if (const json* v = find(j, "innovation")) {
        m.innovation = parse_innovation(*v, where + ".innovation");
    }
    if (const json* v = find(j, "theta_star")) {
        m.theta_star = number(*v, where + ".theta_star");
    }
    if (const json* v = find(j, "theta_star_range")) {
        m.theta_star_range = range(*v, where + ".theta_star_range");
    }
    if (const json* v = find(j, "phi_star")) {
        m.phi_star = number(*v, where + ".phi_star");
    }
    if (const json* v = find(j, "alpha0")) {
        m.alpha0 = number(*v, where + ".alpha0");
    }
    if (const json* v = find(j, "alpha1")) {
        m.alpha1 = number(*v, where + ".alpha1");
    }
    if (const json* v = find(j, "alpha1_range")) {
        m.alpha1_range = range(*v, where + ".alpha1_range");
    }
    if (const json* v = find(j, "alpha0_init")) {
        m.alpha0_init = number(*v, where + ".alpha0_init");
    }
    if (const json* v = find(j, "freeze_alpha0")) {
        m.freeze_alpha0 = boolean(*v, where + ".freeze_alpha0");
    }
    if (const json* v = find(j, "init_radius")) {
        m.init_radius = number(*v, where + ".init_radius");
    }
    if (const json* v = find(j, "projection")) {
        m.projection = parse_projection(*v, where + ".projection");
    }
    if (const json* v = find(j, "dimension")) {
        m.dimension = unsigned_integer(*v, where + ".dimension");
    }
    if (const json* v = find(j, "center_range")) {
        m.center_range = number(*v, where + ".center_range");
    }
    if (const json* v = find(j, "step_sqrt_dim")) {
        m.step_sqrt_dim = boolean(*v, where + ".step_sqrt_dim");
    }
    if (const json* v = find(j, "csv")) {
        const std::string w = where + ".csv";
        check_keys(*v, w, {"path", "timestamp_column", "value_columns", "deseasonalize"});
        CsvSource src;
        const json* path = find(*v, "path");
        const json* ts = find(*v, "timestamp_column");
        const json* cols = find(*v, "value_columns");
        if (!path || !ts || !cols) {
            fail(w, "needs path, timestamp_column and value_columns");
        }
        src.path = string(*path, w + ".path");
        src.timestamp_column = string(*ts, w + ".timestamp_column");
        if (!cols->is_array() || cols->empty()) {
            fail(w + ".value_columns", "expected a nonempty array of column names");
        }
        for (std::size_t i = 0; i < cols->size(); ++i) {
            src.value_columns.push_back(string((*cols)[i], w + ".value_columns[" + std::to_string(i) + "]"));
        }
        if (const json* d = find(*v, "deseasonalize")) {
            src.deseasonalize = boolean(*d, w + ".deseasonalize");
        }
        m.dimension = src.value_columns.size();
        m.csv = std::move(src);
    }
    return m;
}

}  // namespace

std::size_t ModelConfig::parameter_dimension() const
{
    switch (kind) {
    case ModelKind::ar1:
    case ModelKind::ma1:
        return 1;
    case ModelKind::arch1:
        return 2;
    case ModelKind::ar1_arch1:
        return 3;
    case ModelKind::median:
        return dimension;
    }
    return 0;
}

std::string to_string(ModelKind kind)
{
    switch (kind) {
    case ModelKind::ar1:
        return "ar1";
    case ModelKind::ma1:
        return "ma1";
    case ModelKind::arch1:
        return "arch1";
    case ModelKind::ar1_arch1:
        return "ar1_arch1";
    case ModelKind::median:
        return "median";
    }
    return "?";
}

ScheduleParams parse_schedule(const json& j, ScheduleParams base, const std::string& where)
{
    check_keys(j, where, {"c_gamma", "alpha", "beta", "c_rho", "rho"});
    if (const json* v = find(j, "c_gamma")) {
        base.c_gamma = number(*v, where + ".c_gamma");
    }
    if (const json* v = find(j, "alpha")) {
        base.alpha = number(*v, where + ".alpha");
    }
    if (const json* v = find(j, "beta")) {
        base.beta = number(*v, where + ".beta");
    }
    if (const json* v = find(j, "c_rho")) {
        base.c_rho = unsigned_integer(*v, where + ".c_rho");
    }
    if (const json* v = find(j, "rho")) {
        base.rho = number(*v, where + ".rho");
    }
    try {
        base.validate();
    } catch (const ConfigError& e) {
        fail(where, e.what());
    }
    return base;
}

BoundParams parse_bound_params(const json& j)
{
    const std::string where = "bound";
    check_keys(j, where,
               {"mu", "d_nu", "b_nu", "c_kappa", "delta0", "nu", "sigma", "c_sigma", "c_grad", "c_grad_prime",
                "schedule"});
    BoundParams p;
    auto set = [&](const char* key, double& field) {
        if (const json* v = find(j, key)) {
            field = number(*v, where + "." + key);
        }
    };
    set("mu", p.mu);
    set("d_nu", p.d_nu);
    set("b_nu", p.b_nu);
    set("c_kappa", p.c_kappa);
    set("delta0", p.delta0);
    set("nu", p.uncertainty.nu);
    set("sigma", p.uncertainty.sigma);
    set("c_sigma", p.uncertainty.c_sigma);
    if (const json* v = find(j, "c_grad")) {
        p.c_grad = number(*v, where + ".c_grad");
    }
    if (const json* v = find(j, "c_grad_prime")) {
        p.c_grad_prime = number(*v, where + ".c_grad_prime");
    }
    if (const json* v = find(j, "schedule")) {
        p.schedule = parse_schedule(*v, {}, where + ".schedule");
    }
    try {
        p.validate();
    } catch (const ConfigError& e) {
        fail(where, e.what());
    }
    return p;
}

ExperimentConfig parse_experiment(const json& j)
{
    check_keys(j, "config",
               {"model", "schedule", "horizon", "replications", "seed", "variants", "output", "grid_points"});
    ExperimentConfig cfg;
    const json* model = find(j, "model");
    if (!model) {
        fail("model", "missing");
    }
    cfg.model = parse_model(*model);

    ScheduleParams base;
    if (cfg.model.step_sqrt_dim && cfg.model.kind == ModelKind::median) {
        base.c_gamma = std::sqrt(static_cast<double>(cfg.model.dimension));
    }
    if (const json* v = find(j, "schedule")) {
        cfg.schedule = parse_schedule(*v, base);
    } else {
        cfg.schedule = base;
    }
    if (const json* v = find(j, "horizon")) {
        cfg.horizon = unsigned_integer(*v, "horizon");
    }
    if (const json* v = find(j, "replications")) {
        cfg.replications = unsigned_integer(*v, "replications");
    }
    if (const json* v = find(j, "seed")) {
        cfg.seed = unsigned_integer(*v, "seed");
    }
    if (const json* v = find(j, "grid_points")) {
        cfg.grid_points = unsigned_integer(*v, "grid_points");
    }
    if (const json* v = find(j, "variants")) {
        if (!v->is_array()) {
            fail("variants", "expected an array");
        }
        for (std::size_t i = 0; i < v->size(); ++i) {
            const std::string w = "variants[" + std::to_string(i) + "]";
            const json& item = (*v)[i];
            check_keys(item, w, {"label", "schedule"});
            Variant var;
            const json* label = find(item, "label");
            if (!label) {
                fail(w + ".label", "missing");
            }
            var.label = string(*label, w + ".label");
            const json* sched = find(item, "schedule");
            var.schedule = sched ? parse_schedule(*sched, cfg.schedule, w + ".schedule") : cfg.schedule;
            cfg.variants.push_back(std::move(var));
        }
    }
    if (const json* v = find(j, "output")) {
        check_keys(*v, "output", {"csv", "json"});
        if (const json* p = find(*v, "csv")) {
            cfg.output.csv = string(*p, "output.csv");
        }
        if (const json* p = find(*v, "json")) {
            cfg.output.json = string(*p, "output.json");
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + " is not valid JSON (" + e.what() + ")");
    }
    return parse_experiment(j);
}

std::vector<Variant> ExperimentConfig::resolved_variants() const
{
    if (!variants.empty()) {
        return variants;
    }
    return {Variant{"default", schedule}};
}

void ExperimentConfig::validate() const
{
    if (replications < 1) {
        fail("replications", "must be at least 1");
    }
    if (grid_points < 2) {
        fail("grid_points", "must be at least 2");
    }
    std::set<std::string> labels;
    for (const auto& v : resolved_variants()) {
        if (v.label.empty() || v.label.find_first_of(",\n\r\"") != std::string::npos) {
            fail("variants", "label '" + v.label + "' must be nonempty and free of commas, quotes and newlines");
        }
        if (!labels.insert(v.label).second) {
            fail("variants", "duplicate label '" + v.label + "'");
        }
        if (horizon < batch_size(v.schedule, 1)) {
            fail("horizon", "smaller than the first batch of variant '" + v.label + "'");
        }
    }
    const auto& m = model;
    if (m.theta_star && !(std::abs(*m.theta_star) < 1.0) && m.kind != ModelKind::ma1 &&
        m.kind != ModelKind::median) {
        fail("model.theta_star", "must satisfy |theta_star| < 1");
    }
    if (m.kind == ModelKind::ar1 || m.kind == ModelKind::ar1_arch1) {
        if (!(m.theta_star_range[0] > -1.0 && m.theta_star_range[1] < 1.0)) {
            fail("model.theta_star_range", "must lie inside (-1, 1)");
        }
    }
    if (m.kind == ModelKind::arch1 || m.kind == ModelKind::ar1_arch1) {
        if (!(m.alpha0 > 0.0)) {
            fail("model.alpha0", "must be positive");
        }
        if (m.alpha1 && !(*m.alpha1 >= 0.0)) {
            fail("model.alpha1", "must be nonnegative");
        }
        if (!(m.alpha1_range[0] >= 0.0)) {
            fail("model.alpha1_range", "must be nonnegative");
        }
    }
    if (!(m.init_radius >= 0.0)) {
        fail("model.init_radius", "must be nonnegative");
    }
    if (m.kind == ModelKind::median) {
        if (m.dimension < 1) {
            fail("model.dimension", "must be at least 1");
        }
        if (m.center_range && !(*m.center_range >= 0.0)) {
            fail("model.center_range", "must be nonnegative");
        }
    } else if (m.csv) {
        fail("model.csv", "only the median model reads CSV data");
    }
    try {
        m.projection.validate(m.parameter_dimension());
    } catch (const ConfigError& e) {
        fail("model.projection", e.what());
    }
}

json to_json(const ScheduleParams& s)
{
    return {{"c_gamma", s.c_gamma}, {"alpha", s.alpha}, {"beta", s.beta}, {"c_rho", s.c_rho}, {"rho", s.rho}};
}

json to_json(const BoundParams& p)
{
    json j = {{"mu", p.mu},
              {"d_nu", p.d_nu},
              {"b_nu", p.b_nu},
              {"c_kappa", p.c_kappa},
              {"delta0", p.delta0},
              {"nu", p.uncertainty.nu},
              {"sigma", p.uncertainty.sigma},
              {"c_sigma", p.uncertainty.c_sigma},
              {"schedule", to_json(p.schedule)}};
    if (p.c_grad) {
        j["c_grad"] = *p.c_grad;
    }
    if (p.c_grad_prime) {
        j["c_grad_prime"] = *p.c_grad_prime;
    }
    return j;
}

namespace {

std::vector<Variant> preset_variants(double c_gamma, double beta)
{
    auto make = [&](const char* label, std::uint64_t c_rho, double rho) {
        ScheduleParams s;
        s.c_gamma = c_gamma;
        s.alpha = 2.0 / 3.0;
        s.beta = beta;
        s.c_rho = c_rho;
        s.rho = rho;
        return Variant{label, s};
    };
    return {make("crho1_rho0", 1, 0.0), make("crho64_rho0", 64, 0.0), make("crho64_rho0.5", 64, 0.5)};
}

}  // namespace

std::optional<ExperimentConfig> experiment_preset(const std::string& name)
{
    ExperimentConfig cfg;
    const InnovationSpec lrd = InnovationSpec::fgn_student_t(0.75, 5.0);
    if (name == "ar1-default") {
        cfg.model.kind = ModelKind::ar1;
        cfg.model.innovation = lrd;
    } else if (name == "ma1-default") {
        cfg.model.kind = ModelKind::ma1;
        cfg.model.innovation = lrd;
    } else if (name == "arch1-default") {
        cfg.model.kind = ModelKind::arch1;
    } else if (name == "ar1-arch1-default") {
        cfg.model.kind = ModelKind::ar1_arch1;
    } else if (name == "median-default") {
        cfg.model.kind = ModelKind::median;
        cfg.model.dimension = 36;
        cfg.model.step_sqrt_dim = true;
        cfg.variants = preset_variants(6.0, 1.0 / 3.0);
        cfg.schedule = cfg.variants.back().schedule;
        return cfg;
    } else {
        return std::nullopt;
    }
    cfg.variants = preset_variants(1.0, 0.0);
    cfg.schedule = cfg.variants.back().schedule;
    return cfg;
}

std::optional<BoundParams> bound_preset(const std::string& name)
{
    if (name != "thm1-default") {
        return std::nullopt;
    }
    BoundParams p;
    p.mu = 1.0;
    p.d_nu = 1.0;
    p.b_nu = 0.5;
    p.c_kappa = 1.0;
    p.delta0 = 1.0;
    p.uncertainty = {1.0, 0.5, 1.0};
    p.schedule.c_gamma = 1.0;
    p.schedule.alpha = 2.0 / 3.0;
    p.schedule.beta = 0.0;
    p.schedule.c_rho = 64;
    p.schedule.rho = 0.5;
    return p;
}

}  // namespace streamopt
