#include "pgdpo/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pgdpo/csv.hpp"
#include "pgdpo/errors.hpp"

namespace pgdpo {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

// Typed view of one JSON object that remembers which keys were read, so that
// unknown (typically misspelled) keys can be rejected.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }
    std::string at(const std::string& key) const { return join(path_, key); }

    double num(const std::string& key, double def) {
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(at(key), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(at(key), "must be finite");
        return x;
    }
    long long integer(const std::string& key, long long def) {
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
        return v.get<long long>();
    }
    bool boolean(const std::string& key, bool def) {
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
        return v.get<bool>();
    }
    std::string str(const std::string& key, const std::string& def) {
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(at(key), "expected a string");
        return v.get<std::string>();
    }
    const json* raw(const std::string& key) {
        if (!has(key)) return nullptr;
        return &j_.at(key);
    }
    Obj child(const std::string& key) {
        static const json empty = json::object();
        if (!has(key)) return Obj(empty, at(key));
        return Obj(j_.at(key), at(key));
    }
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Vec number_list(const json& v, const std::string& path, Eigen::Index expected) {
    if (v.is_number()) {
        if (expected < 0) throw ConfigError(path, "expected an array of numbers");
        return Vec::Constant(expected, v.get<double>());
    }
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a number");
        out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    if (!out.allFinite()) throw ConfigError(path, "entries must be finite");
    if (expected >= 0 && out.size() != expected)
        throw ConfigError(path, "expected " + std::to_string(expected) + " entries, got " +
                                    std::to_string(out.size()));
    return out;
}

void require(bool ok, const std::string& field, const std::string& msg) {
    if (!ok) throw ConfigError(field, msg);
}

int checked_int(Obj& o, const std::string& key, int def, int lo) {
    const long long v = o.integer(key, def);
    require(v >= lo && v <= 100000000, o.at(key), "must be an integer >= " + std::to_string(lo));
    return static_cast<int>(v);
}

DiscountKernel kernel_from(Obj& k, int case_id) {
    std::string def_kind = case_id == 1 ? "survival_gamma"
                           : case_id == 2 ? "hyperbolic"
                                          : "time_varying_hyperbolic";
    const std::string kind = k.str("kind", def_kind);
    try {
        if (kind == "exponential") return DiscountKernel::exponential(k.num("rate", 0.1));
        if (kind == "survival_gamma")
            return DiscountKernel::survival_gamma(k.num("alpha0", 1.0), k.num("beta0", 0.2));
        if (kind == "hyperbolic") return DiscountKernel::hyperbolic(k.num("kappa", 1.0));
        if (kind == "time_varying_hyperbolic") {
            const std::string shape_name = k.str("profile", "linear");
            ImpatienceProfile::Shape shape;
            try {
                shape = parse_profile_shape(shape_name);
            } catch (const std::exception&) {
                throw ConfigError(k.at("profile"), "unknown profile '" + shape_name + "'");
            }
            ImpatienceProfile d = ImpatienceProfile::default_for(shape);
            ImpatienceProfile p;
            switch (shape) {
                case ImpatienceProfile::Shape::Linear:
                    p = ImpatienceProfile::linear(k.num("k0", d.k0), k.num("k1", d.k1));
                    break;
                case ImpatienceProfile::Shape::Sinusoidal:
                    p = ImpatienceProfile::sinusoidal(k.num("k0", d.k0), k.num("amplitude", d.amplitude),
                                                      k.num("frequency", d.frequency));
                    break;
                case ImpatienceProfile::Shape::Exponential:
                    p = ImpatienceProfile::exponential(k.num("k0", d.k0), k.num("decay", d.decay));
                    break;
            }
            return DiscountKernel::time_varying_hyperbolic(p);
        }
    } catch (const ConstructionError& e) {
        throw ConfigError(k.at("kind"), e.what());
    } catch (const DomainError& e) {
        throw ConfigError(k.at("kind"), e.what());
    }
    throw ConfigError(k.at("kind"), "unknown kernel kind '" + kind + "'");
}

void check_kernel_horizon(const DiscountKernel& kernel, double horizon, const std::string& field) {
    // Profiles must stay non-negative on [0, T].
    if (kernel.kind() != KernelKind::TimeVaryingHyperbolic) return;
    const auto& p = std::get<DiscountKernel::TimeVaryingHyperbolic>(kernel.params()).profile;
    for (int i = 0; i <= 256; ++i)
        require(p(horizon * i / 256.0) >= 0.0, field, "impatience profile must be >= 0 on [0, T]");
}

}  // namespace

DiscountKernel parse_kernel(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError("kernel", std::string("malformed JSON: ") + e.what());
    }
    Obj k(j, "kernel");
    DiscountKernel kernel = kernel_from(k, 1);
    k.finish();
    return kernel;
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
    }
    RunConfig c;
    Obj root(j, "");
    c.hash = fnv1a64(j.dump());

    // problem
    Obj p = root.child("problem");
    {
        const long long cid = p.integer("case", 1);
        require(cid >= 1 && cid <= 3, p.at("case"), "must be 1, 2 or 3");
        c.case_id = static_cast<int>(cid);
        const double horizon = p.num("horizon", 1.0);
        require(horizon > 0.0, p.at("horizon"), "must be > 0");
        if (c.case_id == 1) {
            c.lq.dim = checked_int(p, "dim", 5, 1);
            c.lq.horizon = horizon;
            c.lq.state_weight = p.num("state_weight", 1.0);
            require(c.lq.state_weight >= 0.0, p.at("state_weight"), "must be >= 0");
            c.lq.control_weight = p.num("control_weight", 0.5);
            require(c.lq.control_weight > 0.0, p.at("control_weight"), "must be > 0");
            c.lq.terminal_weight = p.num("terminal_weight", 1.0);
            require(c.lq.terminal_weight >= 0.0, p.at("terminal_weight"), "must be >= 0");
            c.lq.noise = p.num("noise", 0.2);
            require(c.lq.noise >= 0.0, p.at("noise"), "must be >= 0");
            if (const json* t = p.raw("target"))
                c.lq.target = number_list(*t, p.at("target"), c.lq.dim);
            else
                c.lq.target = Vec::Zero(c.lq.dim);
        } else {
            c.merton.horizon = horizon;
            c.merton.rate = p.num("rate", 0.02);
            c.merton.bequest = p.num("bequest", 0.2);
            require(c.merton.bequest >= 0.0, p.at("bequest"), "must be >= 0");
            const json* er = p.raw("excess_return");
            const json* cov = p.raw("covariance");
            require((er == nullptr) == (cov == nullptr), p.at(er ? "covariance" : "excess_return"),
                    "excess_return and covariance must be given together");
            c.market_seed = static_cast<std::uint64_t>(p.integer("market_seed", 2024));
            if (er != nullptr) {
                c.market_explicit = true;
                c.merton.excess_return = number_list(*er, p.at("excess_return"), -1);
                c.assets = static_cast<int>(c.merton.excess_return.size());
                require(c.assets >= 1, p.at("excess_return"), "needs at least one asset");
                if (p.has("assets"))
                    require(p.integer("assets", 0) == c.assets, p.at("excess_return"),
                            "length must equal problem.assets");
                require(cov->is_array() && static_cast<int>(cov->size()) == c.assets,
                        p.at("covariance"), "must be an assets x assets array");
                c.merton.covariance.resize(c.assets, c.assets);
                for (int i = 0; i < c.assets; ++i) {
                    const std::string row = p.at("covariance") + "[" + std::to_string(i) + "]";
                    c.merton.covariance.row(i) = number_list((*cov)[i], row, c.assets).transpose();
                }
                try {
                    MertonLogProblem probe(c.merton, "probe");
                } catch (const ConstructionError& e) {
                    throw ConfigError(p.at("covariance"), e.what());
                }
            } else {
                c.assets = checked_int(p, "assets", 5, 1);
                MertonParams g = generate_market(c.assets, c.market_seed, c.merton.bequest, horizon);
                c.merton.excess_return = g.excess_return;
                c.merton.covariance = g.covariance;
            }
        }
        p.finish();
    }
    const int d = c.state_dim();
    const int m = c.control_dim();
    const double horizon = c.horizon();

    // kernel
    {
        Obj k = root.child("kernel");
        c.kernel = kernel_from(k, c.case_id);
        k.finish();
        check_kernel_horizon(c.kernel, horizon, "kernel.profile");
        const KernelKind kind = c.kernel.kind();
        if (c.case_id == 1)
            require(kind == KernelKind::SurvivalGamma || kind == KernelKind::Exponential, "kernel.kind",
                    "case 1 needs a multiplicative kernel (survival_gamma or exponential)");
        if (c.case_id == 2)
            require(kind == KernelKind::Hyperbolic, "kernel.kind", "case 2 needs a hyperbolic kernel");
        if (c.case_id == 3)
            require(kind == KernelKind::TimeVaryingHyperbolic, "kernel.kind",
                    "case 3 needs a time_varying_hyperbolic kernel");
    }

    // policy
    {
        Obj po = root.child("policy");
        if (const json* h = po.raw("hidden")) {
            require(h->is_array(), po.at("hidden"), "expected an array of widths");
            c.hidden.clear();
            for (std::size_t i = 0; i < h->size(); ++i) {
                const auto& w = (*h)[i];
                const std::string f = po.at("hidden") + "[" + std::to_string(i) + "]";
                require(w.is_number_integer() && w.get<long long>() >= 1 && w.get<long long>() <= 4096, f,
                        "widths must be integers in [1, 4096]");
                c.hidden.push_back(w.get<int>());
            }
        }
        if (const json* h = po.raw("heads")) {
            require(h->is_array(), po.at("heads"), "expected an array of head names");
            require(static_cast<int>(h->size()) == m, po.at("heads"),
                    "needs one head per control (" + std::to_string(m) + ")");
            for (std::size_t i = 0; i < h->size(); ++i) {
                const std::string f = po.at("heads") + "[" + std::to_string(i) + "]";
                require((*h)[i].is_string(), f, "expected a string");
                try {
                    c.heads.push_back(parse_head((*h)[i].get<std::string>()));
                } catch (const ConstructionError& e) {
                    throw ConfigError(f, e.what());
                }
            }
        } else {
            c.heads.assign(m, OutputHead::Identity);
            if (c.case_id != 1) c.heads.back() = OutputHead::Softplus;
        }
        if (c.case_id != 1)
            require(c.heads.back() == OutputHead::Softplus,
                    po.at("heads") + "[" + std::to_string(m - 1) + "]",
                    "consumption head must be softplus to keep c > 0");
        po.finish();
    }

    // anchor
    {
        Obj a = root.child("anchor");
        const std::string tm = a.str("time", c.case_id == 1 ? "uniform" : "fixed");
        if (tm == "uniform")
            c.anchor_time = AnchorDistribution::Time::Uniform;
        else if (tm == "fixed")
            c.anchor_time = AnchorDistribution::Time::Fixed;
        else
            throw ConfigError(a.at("time"), "must be 'uniform' or 'fixed'");
        c.anchor_t0 = a.num("t0", 0.0);
        require(c.anchor_t0 >= 0.0 && c.anchor_t0 < horizon, a.at("t0"), "must lie in [0, T)");
        if (c.case_id == 1) {
            c.anchor_halfwidth = a.num("halfwidth", 1.0);
            require(c.anchor_halfwidth > 0.0, a.at("halfwidth"), "must be > 0");
        } else {
            c.anchor_lo = a.num("lo", -0.5);
            c.anchor_hi = a.num("hi", 0.5);
            require(c.anchor_lo < c.anchor_hi, a.at("hi"), "must exceed anchor.lo");
        }
        a.finish();
    }

    // stage1
    {
        Obj s = root.child("stage1");
        TrainConfig& t = c.stage1;
        t.iterations = checked_int(s, "iterations", t.iterations, 0);
        t.batch = checked_int(s, "batch", t.batch, 1);
        t.steps = checked_int(s, "steps", t.steps, 1);
        t.learning_rate = s.num("learning_rate", t.learning_rate);
        require(t.learning_rate > 0.0, s.at("learning_rate"), "must be > 0");
        const std::string sched = s.str("schedule", "constant");
        if (sched == "constant")
            t.schedule = TrainConfig::Schedule::Constant;
        else if (sched == "cosine")
            t.schedule = TrainConfig::Schedule::Cosine;
        else
            throw ConfigError(s.at("schedule"), "must be 'constant' or 'cosine'");
        t.clip = s.num("clip", t.clip);
        require(t.clip > 0.0, s.at("clip"), "must be > 0");
        t.beta1 = s.num("beta1", t.beta1);
        require(t.beta1 >= 0.0 && t.beta1 < 1.0, s.at("beta1"), "must lie in [0, 1)");
        t.beta2 = s.num("beta2", t.beta2);
        require(t.beta2 >= 0.0 && t.beta2 < 1.0, s.at("beta2"), "must lie in [0, 1)");
        t.adam_eps = s.num("adam_eps", t.adam_eps);
        require(t.adam_eps > 0.0, s.at("adam_eps"), "must be > 0");
        t.antithetic = s.boolean("antithetic", t.antithetic);
        t.richardson = s.boolean("richardson", t.richardson);
        t.control_variate = s.boolean("control_variate", t.control_variate);
        t.cv_decay = s.num("cv_decay", t.cv_decay);
        require(t.cv_decay >= 0.0 && t.cv_decay < 1.0, s.at("cv_decay"), "must lie in [0, 1)");
        t.cv_clip = s.num("cv_clip", t.cv_clip);
        require(t.cv_clip > 0.0, s.at("cv_clip"), "must be > 0");
        if (t.antithetic) require(t.batch % 2 == 0, s.at("batch"), "must be even with antithetic sampling");
        if (t.control_variate) require(t.antithetic, s.at("control_variate"), "requires antithetic sampling");
        s.finish();
    }

    // stage2
    {
        Obj s = root.child("stage2");
        ProjectionConfig& q = c.stage2;
        q.paths = checked_int(s, "paths", q.paths, 1);
        q.steps = checked_int(s, "steps", q.steps, 1);
        q.antithetic = s.boolean("antithetic", q.antithetic);
        if (q.antithetic) require(q.paths % 2 == 0, s.at("paths"), "must be even with antithetic sampling");
        q.tol = s.num("tol", q.tol);
        require(q.tol > 0.0, s.at("tol"), "must be > 0");
        q.newton_max = checked_int(s, "newton_max", q.newton_max, 1);
        q.armijo = s.num("armijo", q.armijo);
        require(q.armijo > 0.0 && q.armijo < 0.5, s.at("armijo"), "must lie in (0, 0.5)");
        q.shrink = s.num("shrink", q.shrink);
        require(q.shrink > 0.0 && q.shrink < 1.0, s.at("shrink"), "must lie in (0, 1)");
        q.hessian_floor = s.num("hessian_floor", q.hessian_floor);
        require(q.hessian_floor > 0.0, s.at("hessian_floor"), "must be > 0");
        q.barrier_initial = s.num("barrier_initial", q.barrier_initial);
        require(q.barrier_initial > 0.0, s.at("barrier_initial"), "must be > 0");
        q.barrier_decay = s.num("barrier_decay", q.barrier_decay);
        require(q.barrier_decay > 0.0 && q.barrier_decay < 1.0, s.at("barrier_decay"), "must lie in (0, 1)");
        q.barrier_floor = s.num("barrier_floor", q.barrier_floor);
        require(q.barrier_floor > 0.0 && q.barrier_floor <= q.barrier_initial, s.at("barrier_floor"),
                "must lie in (0, barrier_initial]");
        s.finish();
    }

    // grid
    {
        Obj g = root.child("grid");
        c.grid.times = checked_int(g, "times", c.grid.times, 1);
        c.grid.points = checked_int(g, "points", c.grid.points, 1);
        c.grid.slice_seed = static_cast<std::uint64_t>(g.integer("slice_seed", 11));
        c.grid.axis_slices = g.boolean("axis_slices", false);
        c.grid.weighted = g.boolean("weighted", false);
        if (c.case_id == 1) {
            c.grid.halfwidth = g.num("halfwidth", c.anchor_halfwidth);
            require(c.grid.halfwidth > 0.0 && c.grid.halfwidth <= c.anchor_halfwidth, g.at("halfwidth"),
                    "must lie in (0, anchor.halfwidth]");
        } else {
            c.grid.lo = g.num("lo", c.anchor_lo);
            c.grid.hi = g.num("hi", c.anchor_hi);
            require(c.grid.lo >= c.anchor_lo && c.grid.hi <= c.anchor_hi && c.grid.lo <= c.grid.hi,
                    g.at("lo"), "grid range must lie inside the anchor range");
        }
        g.finish();
    }

    // seeds and methods
    if (const json* s = root.raw("seeds")) {
        require(s->is_array() && !s->empty(), "seeds", "expected a non-empty array of integers");
        c.seeds.clear();
        for (std::size_t i = 0; i < s->size(); ++i) {
            require((*s)[i].is_number_unsigned(), "seeds[" + std::to_string(i) + "]",
                    "expected a non-negative integer");
            c.seeds.push_back((*s)[i].get<std::uint64_t>());
        }
    }
    if (const json* ms = root.raw("methods")) {
        require(ms->is_array() && !ms->empty(), "methods", "expected a non-empty array");
        c.methods.clear();
        for (std::size_t i = 0; i < ms->size(); ++i) {
            const std::string f = "methods[" + std::to_string(i) + "]";
            require((*ms)[i].is_string(), f, "expected a string");
            const auto name = (*ms)[i].get<std::string>();
            require(name == "dpo" || name == "pgdpo", f, "unknown method '" + name + "'");
            c.methods.push_back(name);
        }
    }

    // output
    {
        Obj o = root.child("output");
        c.out_dir = o.str("dir", c.out_dir);
        require(!c.out_dir.empty(), o.at("dir"), "must not be empty");
        c.trajectory_dump = o.boolean("trajectory_dump", false);
        o.finish();
    }

    // bridge
    {
        Obj b = root.child("bridge");
        BridgeSpec& br = c.bridge;
        br.t0 = b.num("t0", 0.0);
        require(br.t0 >= 0.0 && br.t0 < horizon, b.at("t0"), "must lie in [0, T)");
        if (const json* x = b.raw("x0"))
            br.x0 = number_list(*x, b.at("x0"), d);
        else
            br.x0 = c.case_id == 1 ? Vec(c.lq.target.array() + 0.5) : Vec::Zero(1);
        br.fine_step = b.num("fine_step", br.fine_step);
        require(br.fine_step > 0.0, b.at("fine_step"), "must be > 0");
        br.inner = checked_int(b, "inner", br.inner, 2);
        br.antithetic = b.boolean("antithetic", br.antithetic);
        if (br.antithetic) require(br.inner % 2 == 0, b.at("inner"), "must be even with antithetic sampling");
        auto on_fine_grid = [&](double v) {
            const double r = v / br.fine_step;
            return std::abs(r - std::round(r)) <= 1e-6;
        };
        require(on_fine_grid(horizon - br.t0), b.at("fine_step"), "must divide T - t0");
        if (const json* pt = b.raw("prefix_times")) {
            Vec v = number_list(*pt, b.at("prefix_times"), -1);
            br.prefix_times.assign(v.data(), v.data() + v.size());
        }
        if (const json* dt = b.raw("dts")) {
            Vec v = number_list(*dt, b.at("dts"), -1);
            br.dts.assign(v.data(), v.data() + v.size());
        }
        require(!br.prefix_times.empty(), b.at("prefix_times"), "must not be empty");
        require(!br.dts.empty(), b.at("dts"), "must not be empty");
        for (std::size_t i = 0; i < br.dts.size(); ++i) {
            const std::string f = b.at("dts") + "[" + std::to_string(i) + "]";
            require(br.dts[i] > 0.0 && on_fine_grid(br.dts[i]), f, "must be a positive multiple of fine_step");
        }
        const double max_dt = *std::max_element(br.dts.begin(), br.dts.end());
        for (std::size_t i = 0; i < br.prefix_times.size(); ++i) {
            const std::string f = b.at("prefix_times") + "[" + std::to_string(i) + "]";
            const double pt = br.prefix_times[i];
            require(pt >= br.t0 && pt + max_dt <= horizon + 1e-12 && on_fine_grid(pt - br.t0), f,
                    "must lie on the fine grid with room for the largest dt");
        }
        b.finish();
    }

    // residual
    {
        Obj r = root.child("residual");
        c.residual.every = checked_int(r, "every", c.residual.every, 1);
        c.residual.stride_t = checked_int(r, "stride_t", c.residual.stride_t, 1);
        c.residual.stride_x = checked_int(r, "stride_x", c.residual.stride_x, 1);
        r.finish();
    }

    // sweep
    {
        Obj s = root.child("sweep");
        if (const json* dims = s.raw("dims")) {
            require(dims->is_array() && !dims->empty(), s.at("dims"), "expected a non-empty array");
            c.sweep.dims.clear();
            for (std::size_t i = 0; i < dims->size(); ++i) {
                const std::string f = s.at("dims") + "[" + std::to_string(i) + "]";
                require((*dims)[i].is_number_integer() && (*dims)[i].get<long long>() >= 1, f,
                        "expected a positive integer");
                c.sweep.dims.push_back((*dims)[i].get<int>());
            }
        }
        s.finish();
    }

    // runtime
    {
        Obj r = root.child("runtime");
        if (const json* cf = r.raw("configs")) {
            require(cf->is_array(), r.at("configs"), "expected an array of [M_MC, N'] pairs");
            c.runtime.configs.clear();
            for (std::size_t i = 0; i < cf->size(); ++i) {
                const std::string f = r.at("configs") + "[" + std::to_string(i) + "]";
                const auto& e = (*cf)[i];
                require(e.is_array() && e.size() == 2 && e[0].is_number_integer() && e[1].is_number_integer() &&
                            e[0].get<long long>() >= 2 && e[1].get<long long>() >= 1,
                        f, "expected [M_MC >= 2, N' >= 1]");
                require(!c.stage2.antithetic || e[0].get<long long>() % 2 == 0, f,
                        "M_MC must be even with antithetic sampling");
                c.runtime.configs.emplace_back(e[0].get<int>(), e[1].get<int>());
            }
        }
        c.runtime.repetitions = checked_int(r, "repetitions", c.runtime.repetitions, 0);
        r.finish();
    }

    // explicit projection queries
    {
        Obj pr = root.child("project");
        if (const json* qs = pr.raw("queries")) {
            require(qs->is_array(), pr.at("queries"), "expected an array");
            for (std::size_t i = 0; i < qs->size(); ++i) {
                const std::string f = pr.at("queries") + "[" + std::to_string(i) + "]";
                Obj q((*qs)[i], f);
                Query query;
                query.t = q.num("t", 0.0);
                require(q.has("x"), q.at("x"), "missing state");
                query.x = number_list(*q.raw("x"), q.at("x"), d);
                q.finish();
                c.queries.push_back(std::move(query));
            }
        }
        pr.finish();
    }

    root.finish();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("--config", "cannot read '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

}  // namespace pgdpo
