// Pipeline driver. Links only the C API of the shared library.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advgraph/advgraph.h"

int main(int argc, char** argv) {
    CLI::App app{
        "advgraph: adversarial character-graph defense pipeline\n"
        "commands: synth-glyphs, train-glyph, build-graph, synth, embed-graph,\n"
        "          embed-corpus, train-clf, attack, evaluate, sweep, report"};

    std::string command;
    std::string config_path;
    long long seed = -1;
    int workers = -1;
    std::vector<std::string> overrides;

    app.add_option("command", command, "pipeline stage to run")->required();
    app.add_option("--config", config_path, "key-value config file")->required();
    app.add_option("--seed", seed, "override the global seed");
    app.add_option("--workers", workers, "worker threads for parallel stages");
    app.add_option("overrides", overrides, "key=value config overrides (win over the file)");

    CLI11_PARSE(app, argc, argv);

    if (seed >= 0) overrides.push_back("seed=" + std::to_string(seed));
    if (workers >= 1) overrides.push_back("workers=" + std::to_string(workers));

    std::vector<const char*> raw;
    raw.reserve(overrides.size());
    for (const auto& o : overrides) raw.push_back(o.c_str());

    advg_status status =
        advg_run_stage(command.c_str(), config_path.c_str(), raw.data(), raw.size());
    if (status != ADVG_OK) {
        std::fprintf(stderr, "advgraph %s: %s\n", command.c_str(), advg_last_error());
        return 1;
    }
    return 0;
}
