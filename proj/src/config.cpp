#include "degsde/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace degsde {

namespace {

using Json = nlohmann::ordered_json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads one object, records every key it hands out and rejects the rest so
// that misspelt keys do not silently fall back to defaults.
class Section {
public:
    Section(const Json* node, std::string path) : node_(node), path_(std::move(path)) {
        if (node_ && !node_->is_object()) throw ConfigError(path_, "expected an object");
    }

    bool has(const std::string& key) const { return node_ && node_->contains(key); }
    std::string field(const std::string& key) const { return join(path_, key); }

    const Json* child(const std::string& key) {
        seen_.insert(key);
        return has(key) ? &(*node_)[key] : nullptr;
    }

    double number(const std::string& key, double fallback) {
        const Json* v = child(key);
        if (!v) return fallback;
        if (!v->is_number()) throw ConfigError(field(key), "expected a number");
        const double x = v->get<double>();
        if (!std::isfinite(x)) throw ConfigError(field(key), "must be finite");
        return x;
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        const Json* v = child(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
        return v->get<std::int64_t>();
    }

    std::size_t count(const std::string& key, std::size_t fallback, std::size_t minimum) {
        const auto v = integer(key, static_cast<std::int64_t>(fallback));
        if (v < static_cast<std::int64_t>(minimum))
            throw ConfigError(field(key), "must be >= " + std::to_string(minimum));
        return static_cast<std::size_t>(v);
    }

    std::string text(const std::string& key, std::optional<std::string> fallback) {
        const Json* v = child(key);
        if (!v) {
            if (!fallback) throw ConfigError(field(key), "required key is missing");
            return *fallback;
        }
        if (!v->is_string()) throw ConfigError(field(key), "expected a string");
        return v->get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        const Json* v = child(key);
        if (!v) return fallback;
        if (!v->is_array()) throw ConfigError(field(key), "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : *v) {
            if (!e.is_number()) throw ConfigError(field(key), "expected an array of numbers");
            out.push_back(e.get<double>());
            if (!std::isfinite(out.back())) throw ConfigError(field(key), "entries must be finite");
        }
        return out;
    }

    Vector point(const std::string& key, const Vector& fallback, int dim) {
        if (!has(key)) {
            child(key);
            return fallback;
        }
        const auto v = numbers(key, {});
        if (static_cast<int>(v.size()) != dim)
            throw ConfigError(field(key), "expected " + std::to_string(dim) + " coordinates");
        return Eigen::Map<const Vector>(v.data(), dim);
    }

    void finish() const {
        if (!node_) return;
        for (const auto& [key, value] : node_->items())
            if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }

private:
    const Json* node_;
    std::string path_;
    std::set<std::string> seen_;
};

Json vec_json(const Vector& v) {
    Json j = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

Vector unit(int dim, double scale) {
    Vector v = Vector::Zero(dim);
    v[0] = scale;
    return v;
}

DriftSpec read_drift(Section& parent, int dim, Json& out) {
    Section s(parent.child("drift"), parent.field("drift"));
    const std::string kind = s.text("kind", "zero");
    out["kind"] = kind;
    DriftSpec drift;
    if (kind == "zero") {
        drift = DriftSpec::zero();
    } else if (kind == "constant") {
        const Vector v = s.point("value", Vector::Zero(dim), dim);
        out["value"] = vec_json(v);
        drift = DriftSpec::constant(v);
    } else if (kind == "linear") {
        const double rate = s.number("rate", 0.0);
        out["rate"] = rate;
        drift = DriftSpec::linear(rate);
    } else if (kind == "cubic") {
        const double rate = s.number("rate", 1.0);
        out["rate"] = rate;
        drift = DriftSpec::cubic(rate);
    } else {
        throw ConfigError(s.field("kind"), "unknown drift kind '" + kind + "' (zero, constant, linear, cubic)");
    }
    s.finish();
    return drift;
}

void check_alpha(const Section& s, int dim, double alpha) {
    const double bound = admissible_alpha_bound(dim);
    if (!(alpha >= 0.0 && alpha < bound)) {
        std::ostringstream msg;
        msg << "alpha = " << alpha << " is not admissible in dimension " << dim
            << ": require 0 <= alpha < d/(2d+2) = " << bound;
        throw ConfigError(s.field("alpha"), msg.str());
    }
}

CoefficientSet read_family(const Json* node, Json& out) {
    if (!node) throw ConfigError("family", "required section is missing");
    Section s(node, "family");
    const std::string name = s.text("name", std::nullopt);
    const auto dim = s.integer("dim", 3);
    if (dim < 3) throw ConfigError(s.field("dim"), "dimension must be >= 3");
    if (dim > 64) throw ConfigError(s.field("dim"), "dimension must be <= 64");
    const int d = static_cast<int>(dim);
    out["name"] = name;
    out["dim"] = d;
    Json drift_out;
    try {
        if (name == "powerlaw") {
            PowerLawFamily f;
            f.dim = d;
            f.alpha = s.number("alpha", 0.0);
            check_alpha(s, d, f.alpha);
            f.origin_value = s.number("origin_value", 0.0);
            f.drift = read_drift(s, d, drift_out);
            out["alpha"] = f.alpha;
            out["origin_value"] = f.origin_value;
            out["drift"] = drift_out;
            s.finish();
            return f.build();
        }
        if (name == "bump_lattice") {
            BumpLatticeFamily f;
            f.dim = d;
            f.alpha = s.number("alpha", 0.0);
            check_alpha(s, d, f.alpha);
            f.lattice_count = s.count("lattice_count", 1, 1);
            const std::string variant = s.text("variant", "zeros_at_centers");
            if (variant == "zeros_at_centers") f.variant = BumpLatticeFamily::Variant::zeros_at_centers;
            else if (variant == "positive_at_centers") f.variant = BumpLatticeFamily::Variant::positive_at_centers;
            else throw ConfigError(s.field("variant"), "expected zeros_at_centers or positive_at_centers");
            f.center_weights = s.numbers("center_weights", {});
            f.drift = read_drift(s, d, drift_out);
            out["alpha"] = f.alpha;
            out["lattice_count"] = f.lattice_count;
            out["variant"] = variant;
            out["center_weights"] = f.center_weights;
            out["drift"] = drift_out;
            s.finish();
            return f.build();
        }
        if (name == "constant") {
            ConstantDispersionFamily f;
            f.dim = d;
            f.scale = s.number("scale", 1.0);
            f.drift = read_drift(s, d, drift_out);
            out["scale"] = f.scale;
            out["drift"] = drift_out;
            s.finish();
            return f.build();
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("family", e.what());
    }
    throw ConfigError(s.field("name"), "unknown family '" + name + "' (powerlaw, bump_lattice, constant)");
}

SimConfig read_sim(Section& root, Json& out) {
    Section s(root.child("sim"), "sim");
    SimConfig sim;
    sim.step = s.number("step", 1e-3);
    sim.horizon = s.number("horizon", 1.0);
    sim.path_count = s.count("paths", 1000, 100);
    sim.explosion_threshold = s.number("explosion_threshold", 1e6);
    s.finish();
    out["step"] = sim.step;
    out["horizon"] = sim.horizon;
    out["paths"] = sim.path_count;
    out["explosion_threshold"] = sim.explosion_threshold;
    try {
        sim.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("sim", e.what());
    }
    return sim;
}

Tolerances read_tolerances(Section& root, Json& out) {
    Section s(root.child("tolerances"), "tolerances");
    Tolerances t;
    t.krylov_spread = s.number("krylov_spread", t.krylov_spread);
    t.slope_min = s.number("slope_min", t.slope_min);
    t.occupation_fraction = s.number("occupation_fraction", t.occupation_fraction);
    t.max_excluded_fraction = s.number("max_excluded_fraction", t.max_excluded_fraction);
    s.finish();
    if (!(t.krylov_spread > 1.0)) throw ConfigError("tolerances.krylov_spread", "must exceed 1");
    if (!(t.occupation_fraction > 0.0)) throw ConfigError("tolerances.occupation_fraction", "must be positive");
    if (!(t.max_excluded_fraction >= 0.0)) throw ConfigError("tolerances.max_excluded_fraction", "must be >= 0");
    out["krylov_spread"] = t.krylov_spread;
    out["slope_min"] = t.slope_min;
    out["occupation_fraction"] = t.occupation_fraction;
    out["max_excluded_fraction"] = t.max_excluded_fraction;
    return t;
}

MaximalSuiteSpec read_maximal(Section& root, Json& out) {
    Section s(root.child("maximal"), "maximal");
    MaximalSuiteSpec m;
    const auto dim = s.integer("dim", m.dim);
    if (dim < 1 || dim > 4) throw ConfigError(s.field("dim"), "grid dimension must be in [1, 4]");
    m.dim = static_cast<int>(dim);
    m.half_width = s.number("half_width", m.half_width);
    if (!(m.half_width > 1.2)) throw ConfigError(s.field("half_width"), "box must contain the test fields (> 1.2)");
    m.resolution = s.count("resolution", m.resolution, 8);
    m.refined_resolution = s.count("refined_resolution", m.refined_resolution, 8);
    m.radius_count = s.count("radius_count", m.radius_count, 1);
    m.max_radius = s.number("max_radius", m.max_radius);
    m.pair_count = s.count("pairs", m.pair_count, 1);
    m.lr_exponents = s.numbers("lr_exponents", m.lr_exponents);
    for (double r : m.lr_exponents)
        if (!(r > 1.0)) throw ConfigError(s.field("lr_exponents"), "exponents must exceed 1");
    m.pair_constant = s.number("pair_constant", 0.0);
    if (m.pair_constant == 0.0) m.pair_constant = std::ldexp(1.0, m.dim);
    m.pair_fraction = s.number("pair_fraction", m.pair_fraction);
    m.stability_tolerance = s.number("stability_tolerance", m.stability_tolerance);
    const std::string family = s.text("family", "bump_indicator");
    if (family == "bump_indicator") m.family = MaximalSuiteSpec::Family::bump_indicator;
    else if (family == "constant") m.family = MaximalSuiteSpec::Family::constant;
    else throw ConfigError(s.field("family"), "expected bump_indicator or constant");
    s.finish();
    out["dim"] = m.dim;
    out["half_width"] = m.half_width;
    out["resolution"] = m.resolution;
    out["refined_resolution"] = m.refined_resolution;
    out["radius_count"] = m.radius_count;
    out["max_radius"] = m.max_radius;
    out["pairs"] = m.pair_count;
    out["lr_exponents"] = m.lr_exponents;
    out["pair_constant"] = m.pair_constant;
    out["pair_fraction"] = m.pair_fraction;
    out["stability_tolerance"] = m.stability_tolerance;
    out["family"] = family;
    return m;
}

HypothesisCheckSpec read_check(Section& root, int dim, Json& out) {
    Section s(root.child("check"), "check");
    HypothesisCheckSpec c;
    const auto n0 = s.integer("n0", c.n0);
    if (n0 < 1) throw ConfigError(s.field("n0"), "must be >= 1");
    c.n0 = static_cast<int>(n0);
    {
        Section w(s.child("window"), s.field("window"));
        c.window.center = w.point("center", unit(dim, 2.0), dim);
        c.window.radius = w.number("radius", 0.5);
        if (!(c.window.radius > 0.0)) throw ConfigError(w.field("radius"), "must be positive");
        w.finish();
    }
    c.plan.r_max = s.number("r_max", c.plan.r_max);
    if (!(c.plan.r_max > c.n0)) throw ConfigError(s.field("r_max"), "must exceed n0");
    c.plan.radius_count = s.count("radius_count", c.plan.radius_count, 2);
    c.plan.direction_count = s.count("direction_count", c.plan.direction_count, 1);
    c.plan.ratio_cap = s.number("ratio_cap", c.plan.ratio_cap);
    c.plan.growth_factor = s.number("growth_factor", c.plan.growth_factor);
    s.finish();
    out["n0"] = c.n0;
    out["window"]["center"] = vec_json(c.window.center);
    out["window"]["radius"] = c.window.radius;
    out["r_max"] = c.plan.r_max;
    out["radius_count"] = c.plan.radius_count;
    out["direction_count"] = c.plan.direction_count;
    out["ratio_cap"] = c.plan.ratio_cap;
    out["growth_factor"] = c.plan.growth_factor;
    return c;
}

}  // namespace

void apply_override(Json& tree, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("", "override '" + assignment + "' is not of the form key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    Json value = Json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    Json* node = &tree;
    std::size_t begin = 0;
    while (true) {
        const auto dot = key.find('.', begin);
        const std::string part = key.substr(begin, dot == std::string::npos ? std::string::npos : dot - begin);
        if (part.empty()) throw ConfigError(key, "empty path component in override");
        if (!node->is_object()) {
            if (!node->is_null()) throw ConfigError(key, "override descends into a non-object value");
            *node = Json::object();
        }
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        begin = dot + 1;
    }
}

RunConfig resolve_config(const Json& tree) {
    if (!tree.is_object()) throw ConfigError("", "config root must be an object");
    Section root(&tree, "");
    const auto version = root.integer("schema_version", -1);
    if (version == -1) throw ConfigError("schema_version", "required key is missing");
    if (version != kConfigSchemaVersion)
        throw ConfigError("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                                std::to_string(kConfigSchemaVersion) + ")");

    RunConfig rc;
    Json& out = rc.resolved;
    out["schema_version"] = kConfigSchemaVersion;
    const std::string kind_name = root.text("experiment", std::nullopt);
    try {
        rc.kind = parse_experiment_kind(kind_name);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("experiment", e.what());
    }
    out["experiment"] = kind_name;

    if (const Json* seed = root.child("seed")) {
        if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<std::int64_t>() >= 0))
            throw ConfigError("seed", "expected a non-negative 64-bit integer");
        rc.seed = seed->get<std::uint64_t>();
    }
    const auto threads = root.integer("threads", 0);
    if (threads < 0 || threads > 1024) throw ConfigError("threads", "must be in [0, 1024]");
    rc.threads = static_cast<unsigned>(threads);
    {
        Section o(root.child("output"), "output");
        rc.trajectory_count = o.count("trajectories", 0, 0);
        o.finish();
        out["output"]["trajectories"] = rc.trajectory_count;
    }

    const bool needs_family = rc.kind != ExperimentKind::maximal || root.has("family");
    if (needs_family) {
        Json fam;
        rc.coeffs = read_family(root.child("family"), fam);
        out["family"] = fam;
        Json check;
        rc.check = read_check(root, rc.coeffs->dim(), check);
        out["check"] = check;
    } else {
        root.child("check");
        if (root.has("check")) throw ConfigError("check", "hypothesis checks need a family section");
    }

    if (rc.kind == ExperimentKind::maximal) {
        Json m;
        rc.maximal = read_maximal(root, m);
        out["maximal"] = m;
        for (const char* unused : {"start", "sim", "krylov", "occupation", "uniqueness", "tolerances"})
            if (root.has(unused)) throw ConfigError(unused, "not used by the maximal experiment");
        for (const char* unused : {"start", "sim", "krylov", "occupation", "uniqueness", "tolerances"})
            root.child(unused);
        root.finish();
        rc.hash = fnv1a_hex(out.dump());
        rc.maximal->provenance.config_hash = rc.hash;
        return rc;
    }
    if (root.has("maximal")) throw ConfigError("maximal", "only used by the maximal experiment");

    const int d = rc.coeffs->dim();
    ExperimentConfig ec(rc.kind, *rc.coeffs);
    ec.start = root.point("start", unit(d, 1.0), d);
    out["start"] = vec_json(ec.start);
    Json sim;
    ec.sim = read_sim(root, sim);
    out["sim"] = sim;
    Json tol;
    ec.tolerances = read_tolerances(root, tol);
    out["tolerances"] = tol;

    const bool needs_e = rc.kind == ExperimentKind::krylov || rc.kind == ExperimentKind::uniqueness;
    if (needs_e && !ec.coeffs.in_start_region(ec.start))
        throw ConfigError("start", "start point lies outside the start region E of the family");

    {
        Section k(root.child("krylov"), "krylov");
        if (rc.kind == ExperimentKind::krylov) {
            ec.krylov.center = k.point("center", ec.start, d);
            const auto ks = k.numbers("spike_indices", {1, 2, 4, 8});
            ec.krylov.spike_indices.clear();
            for (double v : ks) {
                if (v < 1 || v != std::floor(v)) throw ConfigError(k.field("spike_indices"), "entries must be integers >= 1");
                ec.krylov.spike_indices.push_back(static_cast<int>(v));
            }
            if (ec.krylov.spike_indices.empty()) throw ConfigError(k.field("spike_indices"), "must not be empty");
            ec.krylov.exponent_eps = k.number("exponent_eps", 1.0);
            if (!(ec.krylov.exponent_eps > 0.0)) throw ConfigError(k.field("exponent_eps"), "must be positive");
            ec.krylov.q_tilde = k.number("q_tilde", 0.0);
            if (ec.krylov.q_tilde == 0.0) {
                const auto alpha = ec.coeffs.info().singular_exponent.value_or(0.0);
                try {
                    ec.krylov.q_tilde = select_exponents(d, alpha, ec.krylov.exponent_eps).q_tilde;
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(k.field("q_tilde"), e.what());
                }
            }
            if (!(ec.krylov.q_tilde > 0.5 * d)) throw ConfigError(k.field("q_tilde"), "must exceed d/2");
            Json kj;
            kj["center"] = vec_json(ec.krylov.center);
            kj["spike_indices"] = ec.krylov.spike_indices;
            kj["q_tilde"] = ec.krylov.q_tilde;
            kj["exponent_eps"] = ec.krylov.exponent_eps;
            out["krylov"] = kj;
            k.finish();
        } else if (root.has("krylov")) {
            throw ConfigError("krylov", "only used by the krylov experiment");
        }
    }
    {
        Section o(root.child("occupation"), "occupation");
        if (rc.kind == ExperimentKind::occupation) {
            ec.occupation_thickness = o.numbers("thickness", ec.occupation_thickness);
            if (ec.occupation_thickness.empty()) throw ConfigError(o.field("thickness"), "must not be empty");
            for (double e : ec.occupation_thickness)
                if (!(e >= 0.0)) throw ConfigError(o.field("thickness"), "entries must be >= 0");
            out["occupation"]["thickness"] = ec.occupation_thickness;
            o.finish();
        } else if (root.has("occupation")) {
            throw ConfigError("occupation", "only used by the occupation experiment");
        }
    }
    {
        Section u(root.child("uniqueness"), "uniqueness");
        if (rc.kind == ExperimentKind::uniqueness) {
            const auto n = u.integer("localization", ec.localization);
            if (n < 2) throw ConfigError(u.field("localization"), "must be >= 2");
            ec.localization = static_cast<int>(n);
            const auto levels = u.integer("levels", ec.refinement_levels);
            if (levels < 3 || levels > 12) throw ConfigError(u.field("levels"), "must be in [3, 12]");
            ec.refinement_levels = static_cast<int>(levels);
            out["uniqueness"]["localization"] = ec.localization;
            out["uniqueness"]["levels"] = ec.refinement_levels;
            u.finish();
        } else if (root.has("uniqueness")) {
            throw ConfigError("uniqueness", "only used by the uniqueness experiment");
        }
    }
    root.finish();

    try {
        ec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("", e.what());
    }
    rc.hash = fnv1a_hex(out.dump());
    ec.provenance.config_hash = rc.hash;
    ec.threads = rc.threads;
    rc.experiment = std::move(ec);
    return rc;
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
    Json tree = Json::parse(text, nullptr, false);
    if (tree.is_discarded()) throw ConfigError("", "config is not valid JSON");
    for (const auto& o : overrides) apply_override(tree, o);
    return resolve_config(tree);
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot open config file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), overrides);
}

void set_seed(RunConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    if (cfg.experiment) cfg.experiment->sim.seed = seed;
    if (cfg.maximal) cfg.maximal->seed = seed;
}

}  // namespace degsde
