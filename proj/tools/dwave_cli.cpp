#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <dwave/dwave.hpp>

namespace {

constexpr const char* kOutEnv = "DWAVE_OUT_DIR";

const char* describe(const std::string& sub)
{
    if (sub == "simulate")
        return "Integrate one trajectory; writes trajectory.csv and simulate.txt";
    if (sub == "attractor")
        return "Sample the invariant set after burn-in; writes attractor.csv and attractor.txt";
    if (sub == "tangent")
        return "Track d-volumes of the linearized flow; writes volume.csv and tangent.txt";
    if (sub == "spectral")
        return "Weighted spectrum, counting and CLR audit; writes spectrum.csv, counting.csv, spectral.txt";
    if (sub == "bound")
        return "Analytic dimension bounds; writes bound.csv and bound_report.txt";
    return "Attractor, bound and contraction cross-check in one run";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Damped wave simulation and attractor dimension estimates"};
    app.require_subcommand(1);

    std::string configPath;
    std::string outDir;
    long long seed = -1;
    int threads = 1;
    bool quiet = false;

    for (const auto& name : dwave::subcommands()) {
        auto* sub = app.add_subcommand(name, describe(name));
        sub->add_option("--config", configPath, "Run configuration (JSON)")->required();
        sub->add_option("--out", outDir, std::string("Output directory (default: config output_dir, then $") + kOutEnv +
                                              ", then ./dwave_out)");
        sub->add_option("--seed", seed, "Seed overriding the config")->check(CLI::NonNegativeNumber);
        sub->add_option("--threads", threads, "Worker threads for parameter sweeps")->check(CLI::PositiveNumber);
        sub->add_flag("--quiet", quiet, "Suppress progress lines");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        dwave::RunConfig cfg = dwave::loadConfig(configPath);
        if (seed >= 0)
            cfg.seed = static_cast<std::uint64_t>(seed);
        dwave::RunOptions opts;
        opts.threads = threads;
        opts.log = quiet ? nullptr : &std::cerr;
        if (!outDir.empty())
            opts.outDir = outDir;
        else if (!cfg.outputDir.empty())
            opts.outDir = cfg.outputDir;
        else if (const char* env = std::getenv(kOutEnv); env && *env)
            opts.outDir = env;
        dwave::RunResult res = dwave::run(sub, cfg, opts);
        std::cout << res.summary << '\n';
        for (const auto& p : res.artifacts)
            std::cout << "wrote " << p.string() << '\n';
        return 0;
    } catch (const dwave::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return dwave::exitCode(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
