#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "cmj/errors.hpp"
#include "cmj/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"CMJ forests with mean-field interaction: simulation and limit checks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(cmj::kVersion));

    std::string config, out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    for (auto kind : cmj::kKinds) {
        auto* sub = app.add_subcommand(std::string(kind), "run a '" + std::string(kind) + "' experiment");
        sub->add_option("--config", config, "experiment config (JSON)")->required();
        sub->add_option("--out", out, "output directory")->required();
        sub->add_option("--seed", seed, "master seed, overrides run.seed");
        sub->add_option("--threads", threads, "worker threads, 0 = all cores")->capture_default_str();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string kind = app.get_subcommands().front()->get_name();
    try {
        auto c = cmj::load_config(config);
        c.kind = kind;
        if (seed) c.run.seed = *seed;
        cmj::run_experiment(c, out, threads);
        std::printf("%s\n", out.c_str());
        return 0;
    } catch (const cmj::ConfigError& e) {
        std::fprintf(stderr, "cmjsim: invalid configuration: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "cmjsim: %s\n", e.what());
        return 3;
    }
}
