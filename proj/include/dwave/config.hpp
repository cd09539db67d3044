#ifndef DWAVE_CONFIG_HPP
#define DWAVE_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "model.hpp"

namespace dwave {

inline constexpr int kSchemaVersion = 1;

/// Spatial field given by kind: constant{value}, gaussian{amplitude, width}, file{path}.
struct FieldSpec {
    std::string kind = "constant";
    double value = 0.0;
    double amplitude = 1.0;
    double width = 1.0;
    std::string path;
};

struct GridSpec {
    std::vector<Interval> extent;
    std::vector<int> n;
};

struct ModelSpec {
    std::string kind = "zero"; ///< cubic | xcubic | zero
    double a = 1.0;
    double b = 1.0;
    FieldSpec g;
};

struct IntegratorSpec {
    double dt = 1e-2;
    double T = 10.0;
    double ceiling = 1e6;
    int saveEvery = 1;
    bool dumpStates = false;
};

/// Initial displacement: modes (seeded random sine combination), sine{mode}, zero. Velocity starts at 0.
struct InitialSpec {
    std::string kind = "modes";
    double amplitude = 1.0;
    int modes = 4;
    int mode = 1;
};

struct DissipativeSpec {
    bool present = false;
    double mu = 2.0;
    double c = 1.0;
    double uLo = -3.0;
    double uHi = 3.0;
    int samples = 2001;
};

struct AttractorSpec {
    std::optional<double> burnIn; ///< default 50/α
    int samples = 20;
    std::optional<double> stride; ///< default 1/α
};

struct TangentSpec {
    int d = 3;
    int qrInterval = 10;
    std::optional<double> T;  ///< default integrator T
    std::optional<double> dt; ///< default integrator dt
};

struct SpectralSpec {
    int k = 10;
    double epsilon = 0.1;
    std::string weight = "attractor"; ///< attractor | constant
    double weightValue = 1.0;
    std::vector<double> lambdaSweep; ///< explicit λ̃ values
    double sweepMin = 1.0;
    double sweepMax = 100.0;
    int sweepCount = 20;
};

struct BoundSpec {
    double Mr = 1.0;
    double r = 4.0;
    double safety = 1.0;
    std::optional<double> lambda1;
    std::optional<double> cTilde;
};

struct RunConfig {
    int schemaVersion = kSchemaVersion;
    std::string scenario;
    std::uint64_t seed = 0;
    std::string outputDir;
    std::optional<GridSpec> grid;
    FieldSpec beta;
    double betaSigma = 2.0;
    ModelSpec model;
    std::optional<double> alpha;
    std::optional<double> epsilon;
    IntegratorSpec integrator;
    InitialSpec initial;
    DissipativeSpec dissipative;
    AttractorSpec attractor;
    TangentSpec tangent;
    SpectralSpec spectral;
    BoundSpec bound;
    double MB = 1.0;
    std::filesystem::path baseDir; ///< directory of the config file; relative paths resolve here

    /// Damping coefficient of the α-form: α itself, or ε^{-1/2}.
    double effectiveAlpha() const { return alpha ? *alpha : 1.0 / std::sqrt(*epsilon); }
};

namespace detail {

using json = nlohmann::json;

/// Reads one JSON object, tracking consumed keys so that leftovers can be rejected.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key)
    {
        used_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key, std::optional<double> def = std::nullopt)
    {
        if (!has(key)) {
            if (!def)
                throw ConfigError(field(key), "required number is missing");
            return *def;
        }
        const json& v = raw(key);
        if (!v.is_number())
            throw ConfigError(field(key), "expected a number");
        double x = v.get<double>();
        if (!std::isfinite(x))
            throw ConfigError(field(key), "must be finite");
        return x;
    }

    std::optional<double> optionalNumber(const std::string& key)
    {
        if (!has(key) || raw(key).is_null())
            return std::nullopt;
        return number(key);
    }

    double positive(const std::string& key, std::optional<double> def = std::nullopt)
    {
        double x = number(key, def);
        if (!(x > 0.0))
            throw ConfigError(field(key), "must be positive");
        return x;
    }

    long long integer(const std::string& key, std::optional<long long> def = std::nullopt)
    {
        if (!has(key)) {
            if (!def)
                throw ConfigError(field(key), "required integer is missing");
            return *def;
        }
        const json& v = raw(key);
        if (!v.is_number_integer())
            throw ConfigError(field(key), "expected an integer");
        return v.get<long long>();
    }

    bool boolean(const std::string& key, bool def)
    {
        if (!has(key))
            return def;
        const json& v = raw(key);
        if (!v.is_boolean())
            throw ConfigError(field(key), "expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key, std::optional<std::string> def = std::nullopt)
    {
        if (!has(key)) {
            if (!def)
                throw ConfigError(field(key), "required string is missing");
            return *def;
        }
        const json& v = raw(key);
        if (!v.is_string())
            throw ConfigError(field(key), "expected a string");
        return v.get<std::string>();
    }

    std::string oneOf(const std::string& key, const std::vector<std::string>& allowed, const std::string& def)
    {
        std::string s = string(key, def);
        for (const auto& a : allowed)
            if (s == a)
                return s;
        std::string list;
        for (const auto& a : allowed)
            list += (list.empty() ? "" : ", ") + a;
        throw ConfigError(field(key), "unknown value '" + s + "' (expected one of: " + list + ")");
    }

    ObjectReader object(const std::string& key) { return ObjectReader(raw(key), field(key)); }

    /// Reject any key that was never read.
    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key()))
                throw ConfigError(field(it.key()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

inline FieldSpec parseFieldSpec(ObjectReader r)
{
    FieldSpec f;
    f.kind = r.oneOf("kind", {"constant", "gaussian", "file"}, "constant");
    if (f.kind == "constant")
        f.value = r.number("value", 0.0);
    else if (f.kind == "gaussian") {
        f.amplitude = r.number("amplitude", 1.0);
        f.width = r.positive("width", 1.0);
    } else
        f.path = r.string("path");
    r.finish();
    return f;
}

inline GridSpec parseGrid(ObjectReader r)
{
    GridSpec g;
    const json& ext = r.raw("extent");
    const json& n = r.raw("n");
    if (!ext.is_array() || ext.empty() || ext.size() > 3)
        throw ConfigError(r.field("extent"), "expected 1 to 3 [lo, hi] pairs");
    if (!n.is_array() || n.size() != ext.size())
        throw ConfigError(r.field("n"), "expected one interior point count per axis");
    for (std::size_t k = 0; k < ext.size(); ++k) {
        const json& e = ext[k];
        std::string f = r.field("extent") + "[" + std::to_string(k) + "]";
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw ConfigError(f, "expected [lo, hi]");
        Interval iv{e[0].get<double>(), e[1].get<double>()};
        if (!(iv.hi > iv.lo))
            throw ConfigError(f, "need hi > lo");
        g.extent.push_back(iv);
        std::string fn = r.field("n") + "[" + std::to_string(k) + "]";
        if (!n[k].is_number_integer() || n[k].get<long long>() < 1 || n[k].get<long long>() > 4096)
            throw ConfigError(fn, "expected an integer in [1, 4096]");
        g.n.push_back(static_cast<int>(n[k].get<long long>()));
    }
    r.finish();
    return g;
}

} // namespace detail

/// Parse and validate a configuration tree. Unknown keys are errors.
inline RunConfig parseConfig(const nlohmann::json& root, const std::filesystem::path& baseDir = {})
{
    using detail::ObjectReader;
    ObjectReader r(root, "");
    RunConfig c;
    c.baseDir = baseDir;
    c.schemaVersion = static_cast<int>(r.integer("schema_version"));
    if (c.schemaVersion != kSchemaVersion)
        throw ConfigError("schema_version", "unsupported version " + std::to_string(c.schemaVersion) +
                                                " (this build reads " + std::to_string(kSchemaVersion) + ")");
    c.scenario = r.string("scenario");
    long long seed = r.integer("seed", 0);
    if (seed < 0)
        throw ConfigError("seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);
    c.outputDir = r.string("output_dir", "");
    if (r.has("grid"))
        c.grid = detail::parseGrid(r.object("grid"));
    if (r.has("beta"))
        c.beta = detail::parseFieldSpec(r.object("beta"));
    c.betaSigma = r.number("beta_sigma", 2.0);
    if (!(c.betaSigma > 1.5))
        throw ConfigError("beta_sigma", "must exceed 3/2");

    if (r.has("alpha"))
        c.alpha = r.positive("alpha");
    if (r.has("epsilon")) {
        c.epsilon = r.positive("epsilon");
        if (*c.epsilon > 1.0)
            throw ConfigError("epsilon", "must lie in (0, 1]");
    }
    if (c.alpha.has_value() == c.epsilon.has_value())
        throw ConfigError("alpha", "give exactly one of 'alpha' and 'epsilon'");

    if (r.has("bound")) {
        auto b = r.object("bound");
        c.bound.Mr = b.positive("M_r", 1.0);
        c.bound.r = b.number("r", 4.0);
        if (!(c.bound.r > 3.0))
            throw ConfigError(b.field("r"), "must exceed 3");
        c.bound.safety = b.number("safety", 1.0);
        if (!(c.bound.safety >= 1.0))
            throw ConfigError(b.field("safety"), "must be >= 1");
        c.bound.lambda1 = b.optionalNumber("lambda1");
        if (c.bound.lambda1 && !(*c.bound.lambda1 > 0.0))
            throw ConfigError(b.field("lambda1"), "must be positive");
        c.bound.cTilde = b.optionalNumber("c_tilde");
        if (c.bound.cTilde && !(*c.bound.cTilde >= 0.0))
            throw ConfigError(b.field("c_tilde"), "must be >= 0");
        b.finish();
    }

    if (r.has("model")) {
        auto m = r.object("model");
        c.model.kind = m.oneOf("kind", {"cubic", "xcubic", "zero"}, "zero");
        if (c.model.kind == "cubic") {
            c.model.a = m.number("a", 1.0);
            c.model.b = m.number("b", 1.0);
        } else if (c.model.kind == "xcubic") {
            c.model.g = detail::parseFieldSpec(m.object("g"));
        }
        m.finish();
    }

    if (r.has("integrator")) {
        auto i = r.object("integrator");
        c.integrator.dt = i.positive("dt", 1e-2);
        c.integrator.T = i.number("T", 10.0);
        if (!(c.integrator.T >= 0.0))
            throw ConfigError(i.field("T"), "must be >= 0");
        c.integrator.ceiling = i.positive("ceiling", 1e6);
        long long se = i.integer("save_every", 1);
        if (se < 1)
            throw ConfigError(i.field("save_every"), "must be >= 1");
        c.integrator.saveEvery = static_cast<int>(se);
        c.integrator.dumpStates = i.boolean("dump_states", false);
        i.finish();
    }

    if (r.has("initial")) {
        auto i = r.object("initial");
        c.initial.kind = i.oneOf("kind", {"modes", "sine", "zero"}, "modes");
        c.initial.amplitude = i.number("amplitude", 1.0);
        long long modes = i.integer("modes", 4), mode = i.integer("mode", 1);
        if (modes < 1)
            throw ConfigError(i.field("modes"), "must be >= 1");
        if (mode < 1)
            throw ConfigError(i.field("mode"), "must be >= 1");
        c.initial.modes = static_cast<int>(modes);
        c.initial.mode = static_cast<int>(mode);
        i.finish();
    }

    if (r.has("dissipative")) {
        auto d = r.object("dissipative");
        c.dissipative.present = true;
        c.dissipative.mu = d.positive("mu", 2.0);
        c.dissipative.c = d.number("c", 1.0);
        if (d.has("u_range")) {
            const auto& ur = d.raw("u_range");
            if (!ur.is_array() || ur.size() != 2 || !ur[0].is_number() || !ur[1].is_number() ||
                !(ur[1].get<double>() > ur[0].get<double>()))
                throw ConfigError(d.field("u_range"), "expected [lo, hi] with hi > lo");
            c.dissipative.uLo = ur[0].get<double>();
            c.dissipative.uHi = ur[1].get<double>();
        }
        long long s = d.integer("samples", 2001);
        if (s < 2)
            throw ConfigError(d.field("samples"), "must be >= 2");
        c.dissipative.samples = static_cast<int>(s);
        d.finish();
    }

    if (r.has("attractor")) {
        auto a = r.object("attractor");
        if (a.has("burn_in")) {
            c.attractor.burnIn = a.number("burn_in");
            if (!(*c.attractor.burnIn >= 0.0))
                throw ConfigError(a.field("burn_in"), "must be >= 0");
        }
        long long s = a.integer("samples", 20);
        if (s < 1)
            throw ConfigError(a.field("samples"), "must be >= 1");
        c.attractor.samples = static_cast<int>(s);
        if (a.has("stride"))
            c.attractor.stride = a.positive("stride");
        a.finish();
    }

    if (r.has("tangent")) {
        auto t = r.object("tangent");
        long long d = t.integer("d", 3), q = t.integer("qr_interval", 10);
        if (d < 1)
            throw ConfigError(t.field("d"), "must be >= 1");
        if (q < 0)
            throw ConfigError(t.field("qr_interval"), "must be >= 0");
        c.tangent.d = static_cast<int>(d);
        c.tangent.qrInterval = static_cast<int>(q);
        if (t.has("T")) {
            c.tangent.T = t.number("T");
            if (!(*c.tangent.T >= 0.0))
                throw ConfigError(t.field("T"), "must be >= 0");
        }
        if (t.has("dt"))
            c.tangent.dt = t.positive("dt");
        t.finish();
    }

    if (r.has("spectral")) {
        auto s = r.object("spectral");
        long long k = s.integer("k", 10);
        if (k < 1)
            throw ConfigError(s.field("k"), "must be >= 1");
        c.spectral.k = static_cast<int>(k);
        c.spectral.epsilon = s.number("epsilon", 0.1);
        if (!(c.spectral.epsilon >= 0.0))
            throw ConfigError(s.field("epsilon"), "must be >= 0");
        c.spectral.weight = s.oneOf("weight", {"attractor", "constant"}, "attractor");
        c.spectral.weightValue = s.positive("weight_value", 1.0);
        if (s.has("lambda_sweep")) {
            const auto& sw = s.raw("lambda_sweep");
            std::string f = s.field("lambda_sweep");
            if (sw.is_array()) {
                if (sw.empty())
                    throw ConfigError(f, "needs at least one value");
                for (const auto& x : sw) {
                    if (!x.is_number() || !(x.get<double>() > 0.0))
                        throw ConfigError(f, "values must be positive numbers");
                    c.spectral.lambdaSweep.push_back(x.get<double>());
                }
            } else if (sw.is_object()) {
                detail::ObjectReader g(sw, f);
                c.spectral.sweepMin = g.positive("min");
                c.spectral.sweepMax = g.positive("max");
                long long n = g.integer("count");
                if (n < 1)
                    throw ConfigError(g.field("count"), "must be >= 1");
                if (!(c.spectral.sweepMax >= c.spectral.sweepMin))
                    throw ConfigError(g.field("max"), "must be >= min");
                c.spectral.sweepCount = static_cast<int>(n);
                g.finish();
            } else {
                throw ConfigError(f, "expected an array of values or {min, max, count}");
            }
        }
        s.finish();
    }

    c.MB = r.positive("M_B", 1.0);
    r.finish();
    return c;
}

inline RunConfig loadConfig(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("--config", "cannot read '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("--config", std::string("not valid JSON: ") + e.what());
    }
    return parseConfig(j, path.parent_path());
}

/// λ̃ values of the sweep: the explicit list, or `count` log-spaced points in [min, max].
inline std::vector<double> lambdaSweep(const SpectralSpec& s)
{
    if (!s.lambdaSweep.empty())
        return s.lambdaSweep;
    std::vector<double> out;
    for (int i = 0; i < s.sweepCount; ++i) {
        double t = s.sweepCount == 1 ? 0.0 : static_cast<double>(i) / (s.sweepCount - 1);
        out.push_back(s.sweepMin * std::pow(s.sweepMax / s.sweepMin, t));
    }
    return out;
}

inline SpatialGrid buildGrid(const RunConfig& c)
{
    if (!c.grid)
        throw ConfigError("grid", "this subcommand needs a grid");
    return SpatialGrid(c.grid->extent, c.grid->n);
}

inline Field buildField(const FieldSpec& f, const SpatialGrid& grid, const std::filesystem::path& baseDir,
                        const std::string& field)
{
    if (f.kind == "constant")
        return Field::Constant(grid.size(), f.value);
    if (f.kind == "gaussian") {
        auto c = grid.center();
        return grid.sample([&](const std::array<double, 3>& x) {
            double r2 = 0.0;
            for (int k = 0; k < grid.dim(); ++k)
                r2 += (x[k] - c[k]) * (x[k] - c[k]);
            return f.amplitude * std::exp(-r2 / (f.width * f.width));
        });
    }
    std::filesystem::path p(f.path);
    if (p.is_relative())
        p = baseDir / p;
    try {
        return loadField(p.string(), grid);
    } catch (const InvalidInput& e) {
        throw ConfigError(field + ".path", e.what());
    }
}

inline PotentialField buildBeta(const RunConfig& c, const SpatialGrid& grid)
{
    return PotentialField{buildField(c.beta, grid, c.baseDir, "beta"), c.betaSigma};
}

inline NonlinearModel buildModel(const RunConfig& c, const SpatialGrid& grid)
{
    const double r = c.bound.r;
    if (c.model.kind == "cubic")
        return cubicModel(grid.size(), c.model.a, c.model.b, r);
    if (c.model.kind == "xcubic")
        return xCubicModel(buildField(c.model.g, grid, c.baseDir, "model.g"), r);
    return zeroModel(grid.size(), r);
}

/// Uniform double in [0, 1) from the top 53 bits of one generator draw.
inline double unitUniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

/// Initial state: displacement from the spec, zero velocity.
template <class Rng>
State buildInitial(const InitialSpec& s, const SpatialGrid& grid, Rng& rng)
{
    State U = State::zero(grid.size());
    if (s.kind == "zero")
        return U;
    auto sineProduct = [&](const std::array<int, 3>& m, const std::array<double, 3>& x) {
        double p = 1.0;
        for (int k = 0; k < grid.dim(); ++k)
            p *= std::sin(m[k] * std::numbers::pi * (x[k] - grid.extent(k).lo) / grid.extent(k).length());
        return p;
    };
    if (s.kind == "sine") {
        std::array<int, 3> m{s.mode, 1, 1};
        U.u = grid.sample([&](const std::array<double, 3>& x) { return s.amplitude * sineProduct(m, x); });
        return U;
    }
    const int M = s.modes;
    const int m1 = grid.dim() > 1 ? M : 1, m2 = grid.dim() > 2 ? M : 1;
    for (int a = 1; a <= M; ++a)
        for (int b = 1; b <= m1; ++b)
            for (int d = 1; d <= m2; ++d) {
                std::array<int, 3> m{a, b, d};
                double coef = s.amplitude * (2.0 * unitUniform(rng()) - 1.0) / static_cast<double>(a * a + b * b + d * d - grid.dim() + 1);
                U.u += grid.sample([&](const std::array<double, 3>& x) { return coef * sineProduct(m, x); });
            }
    return U;
}

} // namespace dwave

#endif
