#include "kecusp/run.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
    CLI::App app{"kecusp: Kaehler-Einstein cusp and cone laboratory"};
    app.set_version_flag("--version", std::string(kecusp::kVersion));
    std::string config_path, preset_name, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--preset", preset_name, "built-in configuration")
        ->check(CLI::IsMember(kecusp::preset_names()));
    app.add_option("--out", out_dir, "output directory (overrides $KECUSP_OUT_DIR and the config)");
    app.add_option("--seed", seed, "random seed recorded with the run");
    app.add_option("--threads", threads, "worker threads for parameter fan-out");
    CLI11_PARSE(app, argc, argv);

    if (config_path.empty() == preset_name.empty()) {
        std::cerr << "error: give exactly one of --config or --preset\n";
        return kecusp::exit_config;
    }

    kecusp::RunConfig cfg;
    try {
        if (!preset_name.empty()) {
            cfg = kecusp::preset(preset_name);
        } else {
            std::ifstream in(config_path);
            if (!in) throw kecusp::ConfigError("--config", "cannot read '" + config_path + "'");
            std::stringstream buf;
            buf << in.rdbuf();
            cfg = kecusp::parse_config_text(buf.str());
        }
    } catch (const kecusp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kecusp::exit_config;
    }
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;

    const kecusp::RunOutcome r =
        kecusp::run(cfg, out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir));
    if (r.exit_code != kecusp::exit_ok) {
        std::cerr << "kecusp: " << r.message << " (exit " << r.exit_code << ")\n";
    } else {
        std::cout << "wrote";
        for (const auto& f : r.files) std::cout << ' ' << (r.out_dir / f).string();
        std::cout << '\n';
    }
    return r.exit_code;
}
