#ifndef DWAVE_RUNNER_HPP
#define DWAVE_RUNNER_HPP

#include <atomic>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "bounds.hpp"
#include "config.hpp"
#include "io.hpp"
#include "spectral.hpp"
#include "tangent.hpp"

namespace dwave {

/// Run fn(i) for i in [0, n) on up to `threads` workers. Results must be written by index.
template <class Fn>
void parallelFor(int n, int threads, Fn&& fn)
{
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    for (auto& th : pool)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

struct RunOptions {
    std::filesystem::path outDir = "dwave_out";
    int threads = 1;
    std::ostream* log = nullptr;
};

struct RunResult {
    std::vector<std::filesystem::path> artifacts;
    std::string summary;
};

/// Grid, operator and model of a configuration, with the base-slope hypothesis checked.
struct Scenario {
    RunConfig cfg;
    SpatialGrid grid;
    EllipticOperator op;
    NonlinearModel model;

    double lambda1() const { return estimateFormBounds(op, cfg.MB).lambda1; }
};

inline Scenario makeScenario(const RunConfig& cfg)
{
    Scenario s{cfg, buildGrid(cfg), {}, {}};
    s.op = assembleOperator(s.grid, buildBeta(cfg, s.grid));
    s.model = buildModel(cfg, s.grid);
    requireNonnegativeBaseSlope(s.model);
    return s;
}

/// Integrator settings in the α-form (unit inertia); ε configs are run in the fast time s = t/√ε.
inline IntegratorConfig alphaFormIntegrator(const RunConfig& c, double dt, double T)
{
    IntegratorConfig ic;
    ic.alpha = c.effectiveAlpha();
    double scale = c.epsilon ? 1.0 / std::sqrt(*c.epsilon) : 1.0;
    ic.dt = dt * scale;
    ic.T = T * scale;
    ic.ceiling = c.integrator.ceiling;
    ic.saveEvery = c.integrator.saveEvery;
    return ic;
}

/// Integrator settings of the equation as configured: ε u_tt + u_t + A u = f for ε configs.
inline IntegratorConfig nativeIntegrator(const RunConfig& c)
{
    IntegratorConfig ic;
    ic.alpha = c.alpha ? *c.alpha : 1.0;
    ic.inertia = c.epsilon ? *c.epsilon : 1.0;
    ic.dt = c.integrator.dt;
    ic.T = c.integrator.T;
    ic.ceiling = c.integrator.ceiling;
    ic.saveEvery = c.integrator.saveEvery;
    return ic;
}

namespace detail {

inline void logLine(const RunOptions& o, const std::string& s)
{
    if (o.log)
        *o.log << s << '\n';
}

inline std::filesystem::path emit(RunResult& res, const RunOptions& o, const std::string& name, const CsvTable& t)
{
    auto p = o.outDir / name;
    t.write(p);
    res.artifacts.push_back(p);
    return p;
}

inline std::filesystem::path emit(RunResult& res, const RunOptions& o, const std::string& name, const Report& r)
{
    auto p = o.outDir / name;
    r.write(p);
    res.artifacts.push_back(p);
    return p;
}

/// d random directions with smooth displacement and velocity parts.
inline std::vector<State> randomDirections(const SpatialGrid& grid, int d, std::mt19937_64& rng)
{
    InitialSpec spec;
    spec.kind = "modes";
    spec.modes = 6;
    std::vector<State> dirs;
    for (int i = 0; i < d; ++i) {
        State p = buildInitial(spec, grid, rng);
        p.v = buildInitial(spec, grid, rng).u;
        for (Index j = 0; j < p.u.size(); ++j) {
            p.u[j] += 1e-3 * (2.0 * unitUniform(rng()) - 1.0);
            p.v[j] += 1e-3 * (2.0 * unitUniform(rng()) - 1.0);
        }
        dirs.push_back(std::move(p));
    }
    return dirs;
}

} // namespace detail

// ---- simulate ---------------------------------------------------------------

inline RunResult runSimulate(const RunConfig& cfg, const RunOptions& o)
{
    RunResult res;
    Scenario s = makeScenario(cfg);
    std::mt19937_64 rng(cfg.seed);
    State U0 = buildInitial(cfg.initial, s.grid, rng);
    IntegratorConfig ic = nativeIntegrator(cfg);
    Trajectory traj = integrate(U0, s.op, s.model, ic);

    CsvTable t({"time", "energy", "h10", "v_l2"});
    double maxIncrease = -std::numeric_limits<double>::infinity();
    double prev = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const State& U = traj.states[k];
        double e = energy(U, s.op, s.model, ic.inertia);
        if (k > 0)
            maxIncrease = std::max(maxIncrease, e - prev);
        prev = e;
        t.addRow({traj.times[k], e, s.op.h10Norm(U.u), l2Norm(s.grid, U.v)});
    }
    detail::emit(res, o, "trajectory.csv", t);
    if (cfg.integrator.dumpStates) {
        auto p = o.outDir / "states.bin";
        writeFileAtomic(p, encodeStates(s.grid, traj.times, traj.states));
        res.artifacts.push_back(p);
    }

    Report r;
    r.section("simulate");
    r.add("scenario", cfg.scenario);
    r.add("form", cfg.epsilon ? "epsilon u_tt + u_t + A u = f" : "u_tt + alpha u_t + A u = f");
    r.add("alpha", ic.alpha);
    r.add("inertia", ic.inertia);
    r.add("dt", ic.dt);
    r.add("steps", static_cast<long long>(ic.steps()));
    r.add("saved_states", static_cast<long long>(traj.size()));
    r.add("final_time", traj.times.back());
    r.add("final_energy", prev);
    r.add("max_energy_increase_between_saves", traj.size() > 1 ? maxIncrease : 0.0);
    r.add("escaped", traj.escaped);
    if (traj.escaped)
        r.add("note", traj.note);
    detail::emit(res, o, "simulate.txt", r);
    if (traj.escaped)
        throw NumericalFailure(traj.note + " (outputs truncated at the escape time)");
    res.summary = "simulate: " + std::to_string(traj.size()) + " states, final energy " + formatNumber(prev);
    return res;
}

// ---- attractor --------------------------------------------------------------

struct AttractorOutcome {
    DissipativityVerdict dissipativity;
    double burnIn = 0.0;
    double stride = 0.0;
    InvariantSample sample;
    InvariantSample doubled; ///< same sampling after twice the burn-in
    double maxRelativeChange = 0.0;
};

inline double relativeChange(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), 1e-300); }

inline AttractorOutcome sampleAttractor(const Scenario& s, const RunOptions& o)
{
    const RunConfig& cfg = s.cfg;
    AttractorOutcome out;
    DissipativeData dd{cfg.dissipative.mu, Field::Constant(s.grid.size(), cfg.dissipative.c)};
    out.dissipativity =
        checkDissipativity(s.model, dd, cfg.dissipative.uLo, cfg.dissipative.uHi, cfg.dissipative.samples);
    if (!out.dissipativity.pass) {
        std::ostringstream msg;
        msg << "f u - mu F <= c and F <= c fail with mu = " << dd.mu << ", c = " << cfg.dissipative.c
            << " (worst at node " << out.dissipativity.worstNode << ", u = " << out.dissipativity.worstU
            << "; max f u - mu F - c = " << out.dissipativity.maxMargin
            << ", max F - c = " << out.dissipativity.maxPotential << ")";
        throw HypothesisViolation("Hypothesis 5 (dissipativity)", msg.str());
    }
    IntegratorConfig ic = alphaFormIntegrator(cfg, cfg.integrator.dt, cfg.integrator.T);
    const double alpha = ic.alpha;
    out.burnIn = cfg.attractor.burnIn ? *cfg.attractor.burnIn : 50.0 / alpha;
    out.stride = cfg.attractor.stride ? *cfg.attractor.stride : 1.0 / alpha;
    if (cfg.epsilon) {
        out.burnIn /= std::sqrt(*cfg.epsilon);
        out.stride /= std::sqrt(*cfg.epsilon);
    }
    std::mt19937_64 rng(cfg.seed);
    State U0 = buildInitial(cfg.initial, s.grid, rng);
    detail::logLine(o, "attractor: burn-in " + formatNumber(out.burnIn) + ", " +
                           std::to_string(cfg.attractor.samples) + " samples");
    out.sample = sampleInvariantSet(s.op, s.model, ic, U0, out.burnIn, cfg.attractor.samples, out.stride);
    out.doubled = sampleInvariantSet(s.op, s.model, ic, U0, 2.0 * out.burnIn, cfg.attractor.samples, out.stride);
    const auto& a = out.sample.sup;
    const auto& b = out.doubled.sup;
    out.maxRelativeChange = std::max({relativeChange(a.linf, b.linf), relativeChange(a.lr, b.lr),
                                      relativeChange(a.h10, b.h10)});
    return out;
}

inline void reportAttractor(const AttractorOutcome& a, const Scenario& s, Report& r)
{
    r.section("attractor");
    r.add("dissipativity_mu", s.cfg.dissipative.mu);
    r.add("dissipativity_c", s.cfg.dissipative.c);
    r.add("dissipativity_max_fu_minus_muF_minus_c", a.dissipativity.maxMargin);
    r.add("dissipativity_max_F_minus_c", a.dissipativity.maxPotential);
    r.add("burn_in", a.burnIn);
    r.add("stride", a.stride);
    r.add("samples", static_cast<long long>(a.sample.states.size()));
    r.add("sup_linf", a.sample.sup.linf);
    r.add("sup_lr", a.sample.sup.lr);
    r.add("sup_h10", a.sample.sup.h10);
    r.add("sup_v_l2", a.sample.sup.l2v);
    r.add("doubled_burn_in_sup_linf", a.doubled.sup.linf);
    r.add("doubled_burn_in_sup_lr", a.doubled.sup.lr);
    r.add("doubled_burn_in_sup_h10", a.doubled.sup.h10);
    r.add("max_relative_change_under_doubled_burn_in", a.maxRelativeChange);
    r.add("stable_within_1_percent", a.maxRelativeChange <= 0.01);
    r.note("sup norms are taken over finitely many post-transient states and underestimate the sup over the set");
}

inline CsvTable attractorTable(const InvariantSample& smp, const EllipticOperator& op, double r)
{
    CsvTable t({"time", "linf", "lr", "h10", "v_l2"});
    for (std::size_t k = 0; k < smp.states.size(); ++k) {
        const State& U = smp.states[k];
        t.addRow({smp.times[k], linfNorm(U.u), lpNorm(op.grid(), U.u, r), op.h10Norm(U.u), l2Norm(op.grid(), U.v)});
    }
    return t;
}

inline RunResult runAttractor(const RunConfig& cfg, const RunOptions& o)
{
    RunResult res;
    Scenario s = makeScenario(cfg);
    AttractorOutcome a = sampleAttractor(s, o);
    detail::emit(res, o, "attractor.csv", attractorTable(a.sample, s.op, s.model.r));
    Report r;
    reportAttractor(a, s, r);
    detail::emit(res, o, "attractor.txt", r);
    res.summary = "attractor: sup ||u||_inf = " + formatNumber(a.sample.sup.linf) +
                  ", relative change under doubled burn-in " + formatNumber(a.maxRelativeChange);
    return res;
}

// ---- tangent ----------------------------------------------------------------

struct TangentAudit {
    CsvTable volume{{"time", "log_volume", "trace_b", "trace_upper_bound"}};
    double maxRelDeviation = 0.0; ///< max |2 dlogV/dt - traceB| / max(|traceB|, 1e-12), central differences
    int inequalityViolations = 0;
    double meanTraceB = 0.0;
    double lambda1 = 0.0;
    double delta = 0.0;
    double nuAlpha = 0.0;
    int d = 0;
};

/// Track d directions along a base trajectory from U0 and audit the trace identity and inequality.
inline TangentAudit trackVolumes(const Scenario& s, const State& U0, int d, std::uint64_t seed,
                                 const RunOptions& o)
{
    const RunConfig& cfg = s.cfg;
    TangentAudit audit;
    audit.d = d;
    if (d > 2 * s.grid.size())
        throw ConfigError("tangent.d", "exceeds the phase-space dimension 2N = " + std::to_string(2 * s.grid.size()));
    IntegratorConfig ic = alphaFormIntegrator(cfg, cfg.tangent.dt.value_or(cfg.integrator.dt),
                                              cfg.tangent.T.value_or(cfg.integrator.T));
    const int every = ic.saveEvery;
    ic.saveEvery = 1;
    audit.lambda1 = s.lambda1();
    audit.delta = deltaStar(audit.lambda1, ic.alpha);
    audit.nuAlpha = nuAlpha(audit.lambda1, ic.alpha);
    Trajectory base = integrate(U0, s.op, s.model, ic);
    if (base.escaped)
        throw NumericalFailure("tangent: base trajectory escaped: " + base.note);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    TangentFrame frame0 = orthonormalFrame(detail::randomDirections(s.grid, d, rng), s.op);
    TangentConfig tc{cfg.tangent.qrInterval, audit.delta};

    std::vector<double> traceBs;
    std::vector<double> uppers;
    auto observer = [&](double, const std::vector<State>& dirs, const State& baseState) {
        TraceContext ctx = makeTraceContext(s.model, baseState.u, audit.delta, ic.alpha);
        TangentFrame on = orthonormalFrame(dirs, s.op);
        double tb = traceB(ctx, on, s.op);
        double ub = traceUpperBound(ctx, on, s.op, audit.nuAlpha, audit.lambda1);
        traceBs.push_back(tb);
        uppers.push_back(ub);
    };
    detail::logLine(o, "tangent: d = " + std::to_string(d) + ", " + std::to_string(ic.steps()) + " steps");
    TangentResult tr = evolveTangent(base, frame0, s.op, s.model, tc, observer);

    const auto n = tr.times.size();
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sum += traceBs[k];
        if (traceBs[k] > uppers[k] + 1e-10 * std::abs(uppers[k]))
            ++audit.inequalityViolations;
        if (k > 0 && k + 1 < n) {
            double rate = 2.0 * (tr.logVolume[k + 1] - tr.logVolume[k - 1]) / (tr.times[k + 1] - tr.times[k - 1]);
            audit.maxRelDeviation =
                std::max(audit.maxRelDeviation, std::abs(rate - traceBs[k]) / std::max(std::abs(traceBs[k]), 1e-12));
        }
        if (k % static_cast<std::size_t>(every) == 0 || k + 1 == n)
            audit.volume.addRow({tr.times[k], tr.logVolume[k], traceBs[k], uppers[k]});
    }
    audit.meanTraceB = sum / static_cast<double>(n);
    return audit;
}

inline void reportTangent(const TangentAudit& a, double alpha, int qrInterval, Report& r)
{
    r.section("tangent");
    r.add("d", a.d);
    r.add("alpha", alpha);
    r.add("lambda1", a.lambda1);
    r.add("delta_star", a.delta);
    r.add("nu_alpha", a.nuAlpha);
    r.add("qr_interval", qrInterval);
    r.add("max_relative_deviation_dlogG_dt_vs_traceB", a.maxRelDeviation);
    r.add("trace_inequality_violations", a.inequalityViolations);
    r.add("mean_trace_b", a.meanTraceB);
    r.note("log_volume is (1/2) log det Gram; its time derivative is (1/2) traceB");
}

inline RunResult runTangent(const RunConfig& cfg, const RunOptions& o)
{
    RunResult res;
    Scenario s = makeScenario(cfg);
    std::mt19937_64 rng(cfg.seed);
    State U0 = buildInitial(cfg.initial, s.grid, rng);
    TangentAudit a = trackVolumes(s, U0, cfg.tangent.d, cfg.seed, o);
    detail::emit(res, o, "volume.csv", a.volume);
    Report r;
    reportTangent(a, cfg.effectiveAlpha(), cfg.tangent.qrInterval, r);
    detail::emit(res, o, "tangent.txt", r);
    res.summary = "tangent: max relative deviation " + formatNumber(a.maxRelDeviation) + ", " +
                  std::to_string(a.inequalityViolations) + " inequality violations";
    return res;
}

// ---- spectral ---------------------------------------------------------------

inline RunResult runSpectral(const RunConfig& cfg, const RunOptions& o)
{
    RunResult res;
    Scenario s = makeScenario(cfg);
    const double r = cfg.bound.r;
    WeightPotential W;
    Report rep;
    if (cfg.spectral.weight == "constant") {
        W = WeightPotential::constant(s.grid.size(), cfg.spectral.weightValue);
    } else {
        AttractorOutcome a = sampleAttractor(s, o);
        W = buildWeight(s.model, s.grid, a.sample.states.back().u, cfg.spectral.epsilon);
        reportAttractor(a, s, rep);
    }
    WeightedProblem p{s.op, W};
    const int N = static_cast<int>(s.grid.size());
    SpectralReport full = solveWeighted(p, N);
    const int k = std::min(cfg.spectral.k, N);
    CsvTable spec({"j", "lambda", "mu"});
    for (int j = 0; j < k; ++j)
        spec.addRow({static_cast<double>(j + 1), full.lambdas[j], full.mus[j]});
    detail::emit(res, o, "spectrum.csv", spec);

    const auto sweep = lambdaSweep(cfg.spectral);
    const int m = static_cast<int>(sweep.size());
    std::vector<double> lt(sweep);
    std::vector<int> below(m), negative(m);
    parallelFor(m, o.threads, [&](int i) {
        // On a zero pivot, nudge λ̃ off the eigenvalue and retry.
        for (int attempt = 0;; ++attempt) {
            try {
                negative[i] = countNegative(s.op, lt[i], W);
                break;
            } catch (const NumericalFailure&) {
                if (attempt >= 3)
                    throw;
                lt[i] *= 1.0 + 1e-9;
            }
        }
        below[i] = countBelow(full, lt[i]);
    });
    const double integral = weightPowerIntegral(s.grid, W, r);
    CsvTable counting({"lambda_tilde", "N", "n", "clr_bound", "fitted_M_r"});
    int mismatches = 0, clrViolations = 0;
    bool diagnostic = false;
    std::vector<std::pair<double, int>> pairs;
    for (int i = 0; i < m; ++i) {
        ClrValue clr = clrBound(s.grid, W, lt[i], cfg.bound.Mr, r);
        diagnostic = clr.diagnosticMode;
        double local = below[i] / (std::pow(lt[i], 0.5 * r) * integral);
        counting.addRow({lt[i], static_cast<double>(below[i]), static_cast<double>(negative[i]), clr.value, local});
        if (below[i] != negative[i])
            ++mismatches;
        if (below[i] > clr.value)
            ++clrViolations;
        pairs.emplace_back(lt[i], below[i]);
    }
    detail::emit(res, o, "counting.csv", counting);

    const double fittedSweep = fitClrConstant(pairs, s.grid, W, r);
    const double fittedExact = fitClrConstantFromSpectrum(full, s.grid, W, r);
    SpectralReport head = solveWeighted(p, k);
    AsymptoticVerdict configured = asymptoticAudit(head, s.grid, W, cfg.bound.Mr, r);
    AsymptoticVerdict fitted = asymptoticAudit(head, s.grid, W, fittedExact, r);

    rep.section("spectral");
    rep.add("weight", cfg.spectral.weight);
    rep.add("weight_epsilon", W.epsilon);
    rep.add("k", k);
    rep.add("r", r);
    rep.add("integral_W_r", integral);
    rep.add("count_mismatches", mismatches);
    rep.add("configured_M_r", cfg.bound.Mr);
    rep.add("clr_violations_with_configured_M_r", clrViolations);
    rep.add("clr_diagnostic_mode", diagnostic);
    if (diagnostic)
        rep.note("CLR is a theorem only in dimension 3 with r > 3; here it is a diagnostic");
    rep.add("fitted_M_r_over_sweep", fittedSweep);
    rep.add("fitted_M_r_over_spectrum", fittedExact);
    rep.add("asymptotic_pass_configured_M_r", configured.pass);
    rep.add("asymptotic_min_margin_configured_M_r", configured.minMargin);
    rep.add("asymptotic_pass_fitted_M_r", fitted.pass);
    rep.add("asymptotic_min_margin_fitted_M_r", fitted.minMargin);
    rep.add("log_log_slope_mu", configured.fittedSlope);
    detail::emit(res, o, "spectral.txt", rep);
    if (mismatches > 0)
        throw NumericalFailure("spectral: eigenvalue count and inertia count disagree at " +
                               std::to_string(mismatches) + " sweep points");
    res.summary = "spectral: lambda_1 = " + formatNumber(full.lambdas[0]) + ", fitted M_r " + formatNumber(fittedExact);
    return res;
}

// ---- bound ------------------------------------------------------------------

struct BoundOutcome {
    DimensionBound bound;
    std::optional<CTildeEstimate> cTildeEstimate;
    std::optional<AttractorOutcome> attractor;
};

inline BoundOutcome computeBound(const RunConfig& cfg, const RunOptions& o, const Scenario* s)
{
    BoundOutcome out;
    double lambda1 = 0.0;
    if (cfg.bound.lambda1)
        lambda1 = *cfg.bound.lambda1;
    else if (s)
        lambda1 = s->lambda1();
    else
        throw ConfigError("bound.lambda1", "give lambda1 or a grid to compute it from");
    double ct = 0.0;
    if (cfg.bound.cTilde) {
        ct = *cfg.bound.cTilde;
    } else {
        if (!s)
            throw ConfigError("bound.c_tilde", "give c_tilde or a grid and model to sample the attractor");
        out.attractor = sampleAttractor(*s, o);
        auto smp = cfg.epsilon ? rescaleSample(out.attractor->sample.states, *cfg.epsilon) : out.attractor->sample.states;
        out.cTildeEstimate = cTilde(s->model, s->grid, smp);
        ct = out.cTildeEstimate->value;
    }
    ct *= cfg.bound.safety;
    out.bound = dimensionBound(BoundInputs{lambda1, cfg.effectiveAlpha(), cfg.bound.r, cfg.bound.Mr, ct});
    return out;
}

inline CsvTable boundTable(const DimensionBound& b)
{
    CsvTable t({"lambda1", "alpha", "delta_star", "nu_alpha", "nu_alpha_alpha", "c_tilde", "M_r", "r", "d_scan",
                "dim_H_bound", "dim_F_bound"});
    t.addRow({b.lambda1, b.alpha, b.delta, b.nuAlpha, b.nuAlphaTimesAlpha, b.cTilde, b.Mr, b.r,
              static_cast<double>(b.dScan), b.dClosedH, b.dClosedF});
    return t;
}

inline void reportBound(const BoundOutcome& bo, const RunConfig& cfg, Report& r)
{
    const DimensionBound& b = bo.bound;
    r.section("bound");
    r.add("lambda1", b.lambda1);
    r.add("alpha", b.alpha);
    if (cfg.epsilon) {
        r.add("epsilon", *cfg.epsilon);
        r.note("alpha = epsilon^(-1/2); C~ from the rescaled attractor");
    }
    r.add("delta_star", b.delta);
    r.add("nu_alpha", b.nuAlpha);
    r.add("nu_alpha_alpha", b.nuAlphaTimesAlpha);
    r.add("nu_alpha_alpha_limit", 0.5 * b.lambda1);
    r.note("nu_alpha * alpha increases to lambda1/2 as alpha grows (the formula as given);");
    r.note("the accompanying text states the limit lambda1, which this formula does not reach");
    r.add("c_tilde", b.cTilde);
    r.add("c_tilde_safety_factor", cfg.bound.safety);
    if (bo.cTildeEstimate) {
        r.add("c_tilde_base_slope_lr", bo.cTildeEstimate->baseSlopeLr);
        r.add("c_tilde_sup_linf", bo.cTildeEstimate->supLinf);
        r.add("c_tilde_sup_lr", bo.cTildeEstimate->supLr);
        r.add("c_tilde_sample_size", static_cast<long long>(bo.cTildeEstimate->sampleSize));
        r.note("C~ is estimated from a finite sample of the attractor and may be underestimated");
    }
    r.add("M_r", b.Mr);
    r.add("r", b.r);
    r.add("d_scan", static_cast<long long>(b.dScan));
    r.add("d_scan_vacuous", b.vacuous);
    r.add("d_scan_capped", b.capped);
    r.add("dim_H_bound", b.dClosedH);
    r.add("dim_F_bound", b.dClosedF);
}

inline RunResult runBound(const RunConfig& cfg, const RunOptions& o)
{
    RunResult res;
    std::optional<Scenario> s;
    if (cfg.grid)
        s = makeScenario(cfg);
    BoundOutcome bo = computeBound(cfg, o, s ? &*s : nullptr);
    detail::emit(res, o, "bound.csv", boundTable(bo.bound));
    Report r;
    if (bo.attractor)
        reportAttractor(*bo.attractor, *s, r);
    reportBound(bo, cfg, r);
    detail::emit(res, o, "bound_report.txt", r);
    res.summary = "bound: d_scan = " + std::to_string(bo.bound.dScan) + ", dim_H <= " + formatNumber(bo.bound.dClosedH);
    return res;
}

// ---- pipeline ---------------------------------------------------------------

struct ContractionScan {
    int empiricalD = -1; ///< first d with max over samples of p_d < 0; -1 when none up to J
    int J = 0;
    Eigen::VectorXd maxProfile; ///< max over samples of p_1..p_J
};

/// Sampled contraction threshold: Ky Fan partial sums at each sample, maximized over the sample.
inline ContractionScan contractionThreshold(const Scenario& s, const std::vector<State>& sample, double alpha,
                                            double delta, int J, int threads)
{
    ContractionScan out;
    out.J = J;
    std::vector<Eigen::VectorXd> profiles(sample.size());
    parallelFor(static_cast<int>(sample.size()), threads, [&](int i) {
        TraceContext ctx = makeTraceContext(s.model, sample[static_cast<std::size_t>(i)].u, delta, alpha);
        profiles[static_cast<std::size_t>(i)] = kyFanProfile(ctx, s.op, J);
    });
    out.maxProfile = Eigen::VectorXd::Constant(J, -std::numeric_limits<double>::infinity());
    for (const auto& p : profiles)
        out.maxProfile = out.maxProfile.cwiseMax(p);
    for (int d = 0; d < J; ++d)
        if (out.maxProfile[d] < 0.0) {
            out.empiricalD = d + 1;
            break;
        }
    return out;
}

inline RunResult runPipeline(const RunConfig& cfg, const RunOptions& o)
{
    RunResult res;
    Scenario s = makeScenario(cfg);
    RunConfig bc = cfg;
    bc.bound.cTilde.reset();
    BoundOutcome bo = computeBound(bc, o, &s);
    const AttractorOutcome& a = *bo.attractor;
    const DimensionBound& b = bo.bound;
    detail::emit(res, o, "attractor.csv", attractorTable(a.sample, s.op, s.model.r));
    detail::emit(res, o, "bound.csv", boundTable(b));

    const int N2 = static_cast<int>(2 * s.grid.size());
    const int J = static_cast<int>(std::min<std::int64_t>(N2, b.dScan));
    ContractionScan cs = contractionThreshold(s, a.sample.states, b.alpha, b.delta, J, o.threads);
    CsvTable prof({"d", "max_p_d"});
    for (int d = 0; d < J; ++d)
        prof.addRow({static_cast<double>(d + 1), cs.maxProfile[d]});
    detail::emit(res, o, "contraction.csv", prof);

    const int dTrack = cs.empiricalD > 0 ? cs.empiricalD : std::min(cfg.tangent.d, N2);
    TangentAudit ta = trackVolumes(s, a.sample.states.back(), dTrack, cfg.seed, o);
    detail::emit(res, o, "volume.csv", ta.volume);

    Report r;
    reportAttractor(a, s, r);
    reportBound(bo, cfg, r);
    reportTangent(ta, b.alpha, cfg.tangent.qrInterval, r);
    r.section("cross_check");
    r.add("analytic_d", static_cast<long long>(b.dScan));
    r.add("profile_length", J);
    r.add("empirical_contraction_d", cs.empiricalD);
    const bool consistent = cs.empiricalD > 0 && cs.empiricalD <= b.dScan;
    r.add("empirical_le_analytic", consistent);
    r.add("tracked_d", dTrack);
    r.add("tracked_mean_trace_b", ta.meanTraceB);
    r.note("empirical_contraction_d is the first d with max over sampled states of p_d < 0; -1 means none up to profile_length");
    detail::emit(res, o, "pipeline.txt", r);
    res.summary = "pipeline: empirical d = " + std::to_string(cs.empiricalD) + ", analytic d = " +
                  std::to_string(b.dScan) + (consistent ? " (consistent)" : " (INCONSISTENT)");
    return res;
}

inline const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> names{"simulate", "attractor", "tangent", "spectral", "bound", "pipeline"};
    return names;
}

inline RunResult run(const std::string& sub, const RunConfig& cfg, const RunOptions& o)
{
    if (sub == "simulate")
        return runSimulate(cfg, o);
    if (sub == "attractor")
        return runAttractor(cfg, o);
    if (sub == "tangent")
        return runTangent(cfg, o);
    if (sub == "spectral")
        return runSpectral(cfg, o);
    if (sub == "bound")
        return runBound(cfg, o);
    if (sub == "pipeline")
        return runPipeline(cfg, o);
    throw ConfigError("subcommand", "unknown subcommand '" + sub + "'");
}

} // namespace dwave

#endif
