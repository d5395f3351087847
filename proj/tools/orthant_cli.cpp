#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "orthant/orthant.hpp"

namespace {

int fail(orthant::ErrorKind kind, const std::vector<std::string>& messages) {
    nlohmann::json j = {{"error", std::string(orthant::to_string(kind))}, {"messages", messages}};
    std::cerr << j.dump() << "\n";
    return orthant::exit_code(kind);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Orthant and half-orthant percolation experiments"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(orthant::kVersion));

    std::string config_path;
    app.add_option("--config", config_path, "flat key = value config file")->check(CLI::ExistingFile);

    // Every config key is also a flag; --seed, --threads and --out-dir are the global ones.
    std::map<std::string, std::string> overrides;
    for (const auto& key : orthant::config_keys()) {
        std::string names = "--" + key;
        if (key.size() == 1) names = "-" + key + "," + names;
        if (key == "out_dir") names = "--out-dir,--out_dir";
        if (key == "window_scale") names += ",--window-scale";
        if (key == "p_grid") names += ",--p-grid";
        if (key == "n_list") names += ",--n-list";
        if (key == "round_cap") names += ",--round-cap";
        if (key == "min_successes") names += ",--min-successes";
        if (key == "u_list") names += ",--u-list";
        if (key == "cloud_seeds") names += ",--cloud-seeds";
        app.add_option_function<std::string>(names, [&overrides, key](const std::string& v) { overrides[key] = v; },
                                             "override config key `" + key + "`")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }

    const std::map<std::string, std::string> help{
        {"theta", "theta_n(p) over p_grid x n_list"},
        {"sweep", "theta curve plus decay fits and partial sums"},
        {"critical", "finite-size brackets for the containment threshold and p_c"},
        {"shape", "shape function estimates and point clouds"},
        {"walk", "random walk speed and covariance"},
        {"osss-check", "variance vs influence times revealment"},
        {"russo-check", "-theta' vs total influence on an enumerable window"},
        {"oracle", "exact theta polynomial on an enumerable window"},
        {"explore-trace", "one run of the exploration tree, one reveal per line"},
    };
    for (const auto& name : orthant::commands()) app.add_subcommand(name, help.at(name));

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    std::string text;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    for (const auto& [key, value] : overrides) text += "\n" + key + " = " + value;

    const auto parsed = orthant::parse_config(text);
    if (!parsed.ok()) return fail(orthant::ErrorKind::InvalidConfig, parsed.errors);

    try {
        std::string printed;
        const auto manifest = orthant::run(command, *parsed.config, &printed);
        std::cout << printed;
        for (const auto& f : manifest.files) std::cout << "wrote " << parsed.config->out_dir << "/" << f << "\n";
    } catch (const orthant::Error& e) {
        return fail(e.kind(), {e.what()});
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", "Internal"}, {"messages", {e.what()}}}.dump() << "\n";
        return 1;
    }
    return 0;
}
