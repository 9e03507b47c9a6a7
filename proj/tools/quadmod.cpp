// quadmod — command-line front end for the experiment runner.
//
//   quadmod run <preset|config.json> [--seed N] [--out DIR] [--jobs K]
//   quadmod export-constellation <name> --out FILE
//   quadmod list-presets
//
// Exit codes: 0 success, 2 invalid input (unknown name, malformed config,
// unreachable request), 3 the run finished but some estimates hit the
// simulation cap before reaching their error target.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "quadmod/experiment.hpp"

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitUnderresolved = 3;

quadmod::ExperimentConfig load_run_config(const std::string& what) {
    const auto& names = quadmod::preset_names();
    if (std::find(names.begin(), names.end(), what) != names.end())
        return quadmod::preset_config(what);
    if (!std::filesystem::exists(what))
        throw quadmod::UnknownName("'" + what + "' is neither a preset nor a config file");
    std::ifstream in(what, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    if (!in) throw quadmod::ParseError("cannot read config file '" + what + "'");
    return quadmod::parse_config(text.str());
}

int cmd_run(const std::string& what, bool seed_set, std::uint64_t seed, bool out_set,
            const std::string& out_dir, unsigned jobs) {
    auto cfg = load_run_config(what);
    if (seed_set) cfg.seed = seed;
    if (out_set) cfg.output_dir = out_dir;
    const auto result = quadmod::run_experiment(cfg, jobs);
    std::fputs(result.summary.c_str(), stdout);
    for (const auto& f : result.files) std::printf("wrote %s\n", f.c_str());
    return result.underresolved ? kExitUnderresolved : 0;
}

int cmd_export(const std::string& name, const std::string& out_file) {
    const auto c = quadmod::make_named_constellation(name);
    quadmod::write_constellation_file(out_file, c);
    std::printf("wrote %s (%zu points)\n", out_file.c_str(), c.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"4-D dual-polarization modulation experiments"};
    app.require_subcommand(1);

    std::string run_what, out_dir, export_name, export_file;
    std::uint64_t seed = 1;
    unsigned jobs = 1;

    auto* run = app.add_subcommand("run", "Run a preset or a JSON experiment config");
    run->add_option("what", run_what, "Preset name or path to a config file")->required();
    auto* seed_opt = run->add_option("--seed", seed, "Override the experiment seed");
    auto* out_opt = run->add_option("--out", out_dir, "Output directory");
    run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    auto* exp = app.add_subcommand("export-constellation",
                                   "Write one constellation in the interchange format");
    exp->add_option("name", export_name, "Constellation name (e.g. lam88, dual-qpsk)")
        ->required();
    exp->add_option("--out", export_file, "Destination file")->required();

    auto* list = app.add_subcommand("list-presets", "List built-in experiment presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& name : quadmod::preset_names()) std::printf("%s\n", name.c_str());
            return 0;
        }
        if (exp->parsed()) return cmd_export(export_name, export_file);
        return cmd_run(run_what, seed_opt->count() > 0, seed, out_opt->count() > 0, out_dir,
                       jobs);
    } catch (const quadmod::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    } catch (const quadmod::UnknownName& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    } catch (const quadmod::InvalidCount& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    } catch (const quadmod::CountUnreachable& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    } catch (const quadmod::MissingBits& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    } catch (const quadmod::NoBracket& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fatal: %s\n", e.what());
        return 1;
    }
}
