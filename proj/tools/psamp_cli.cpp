// psamp: run experiment sweeps and write CSV plus JSON sidecar.

#include <psamp/harness.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>
#include <optional>
#include <string>

using namespace psamp;
using namespace psamp::harness;

namespace {

struct RunFlags {
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<double> scale;
    std::string out;
    bool full_scale = false;
    unsigned threads = default_threads();
    bool verbose = false;
    bool check = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f)
{
    auto* cfg = cmd->add_option("--config", f.config, "JSON experiment config file")->check(CLI::ExistingFile);
    auto* pre = cmd->add_option("--preset", f.preset, "named preset (see list-experiments)");
    cfg->excludes(pre);
    cmd->add_option("--seed", f.seed, "base seed (overrides the config)");
    cmd->add_option("--scale", f.scale, "multiply signal lengths and divide the Monte Carlo count")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", f.out, "output CSV path; the sidecar is written next to it");
    cmd->add_flag("--full-scale", f.full_scale, "n = 10^4 and 100 draws");
    cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--verbose,-v", f.verbose, "progress on stderr");
    cmd->add_flag("--check", f.check, "apply the config's tolerance checks; exit 1 on any failure");
}

ExperimentConfig resolve(const RunFlags& f, ExperimentKind kind)
{
    if (f.config.empty() && f.preset.empty()) throw ConfigurationError("one of --config or --preset is required");
    ExperimentConfig cfg = f.config.empty() ? find_preset(f.preset).config : load_config(f.config);
    if (cfg.kind != kind)
        throw ConfigurationError("'" + cfg.name + "' is a " + to_string(cfg.kind) + " experiment; run it with `psamp " +
                                 to_string(cfg.kind) + "`");
    if (f.full_scale) cfg = full_scale(cfg);
    if (f.scale) cfg = scaled(cfg, *f.scale);
    if (f.seed) cfg.seed = *f.seed;
    if (!f.out.empty()) cfg.output = f.out;
    validate(cfg);
    return cfg;
}

int run(const RunFlags& f, ExperimentKind kind)
{
    const auto cfg = resolve(f, kind);
    RunOptions opts;
    opts.threads = f.threads;
    opts.log = f.verbose ? &std::cerr : nullptr;
    const auto out = run_experiment(cfg, opts);
    write_outputs(out, cfg.output);
    fmt::print("{}: {} records -> {} (+ {})\n", cfg.name, out.records.size(), cfg.output,
               sidecar_path(cfg.output).string());
    for (const auto& e : out.errors) {
        fmt::print(stderr, "warning: {} seed {:016x}: {}\n", e.policy, e.seed, e.message);
    }
    if (!f.check) return 0;
    const auto checks = run_checks(out);
    if (checks.empty()) fmt::print("no checks defined for '{}'\n", cfg.name);
    bool ok = true;
    for (const auto& c : checks) {
        fmt::print("{} {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
        ok = ok && c.passed;
    }
    return ok ? 0 : 1;
}

void list_experiments()
{
    for (const auto& p : presets()) {
        fmt::print("{:<26} {:<14} {}\n", p.name, to_string(p.config.kind), p.description);
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Parametric SURE-AMP experiment harness"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        ExperimentKind kind;
        RunFlags flags;
    };
    Sub subs[] = {{"denoise-sweep", "scalar denoising MSE over noise levels", ExperimentKind::DenoiseSweep, {}},
                  {"recover", "AMP recovery SNR over sampling ratios", ExperimentKind::RecoverySweep, {}},
                  {"se-compare", "matrix AMP against state evolution per iteration", ExperimentKind::SeCompare, {}},
                  {"runtime", "AMP wall time against signal length", ExperimentKind::RuntimeSweep, {}}};
    std::vector<CLI::App*> cmds;
    for (auto& s : subs) {
        auto* cmd = app.add_subcommand(s.name, s.help);
        add_run_flags(cmd, s.flags);
        cmds.push_back(cmd);
    }
    auto* list = app.add_subcommand("list-experiments", "list the named presets");

    CLI11_PARSE(app, argc, argv);
    try {
        if (list->parsed()) {
            list_experiments();
            return 0;
        }
        for (std::size_t i = 0; i < cmds.size(); ++i) {
            if (cmds[i]->parsed()) return run(subs[i].flags, subs[i].kind);
        }
    } catch (const ConfigurationError& e) {
        fmt::print(stderr, "configuration error: {}\n", e.what());
        return 2;
    } catch (const CapabilityError& e) {
        fmt::print(stderr, "unsupported: {}\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 3;
    }
    return 0;
}
