#include "bpdg/driver.hpp"
#include "bpdg/errors.hpp"
#include "bpdg/quadrature.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

int cmd_check(const std::string& path) {
    const bpdg::RunConfig config = bpdg::load_config(path);
    bpdg::Simulation sim(config);
    bpdg::Field f = sim.initial_field();
    const auto pot = sim.potential_for(f);
    bpdg::apply_limiter(f);
    const auto sc = sim.step_control(f, pot);
    std::printf("config ok: %d x %d x %d cells, degree %d, %s boundary\n", config.nx, config.np, config.nmu,
                config.degree, std::string(bpdg::to_string(config.boundary)).c_str());
    std::printf("alpha,s1,s2,s3,dt_transport_x,dt_transport_p,dt_transport_mu,dt_collision,dt_accepted\n");
    std::printf("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", sc.alpha, sc.s[0], sc.s[1], sc.s[2],
                sc.dt_transport_x, sc.dt_transport_p, sc.dt_transport_mu, sc.dt_collision, sc.dt_accepted);
    return bpdg::kExitOk;
}

int cmd_dump(const std::string& kind, int order) {
    const auto rule = bpdg::quad_rule(bpdg::quad_kind_from_string(kind), order);
    std::printf("index,node,weight\n");
    for (int j = 0; j < rule.size(); ++j) std::printf("%d,%.17g,%.17g\n", j, rule.nodes[j], rule.weights[j]);
    return bpdg::kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Positivity-preserving DG solver for the 1D Boltzmann-Poisson diode"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int threads = 1;
    auto* run = app.add_subcommand("run", "Run a simulation");
    run->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    run->add_option("--threads", threads, "Worker threads (results may differ in the last bits when > 1)")
        ->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "Output directory (overrides output.dir)");

    std::string check_path;
    auto* check = app.add_subcommand("check", "Validate a config and print the CFL bounds at t = 0");
    check->add_option("--config", check_path, "JSON run configuration")->required()->check(CLI::ExistingFile);

    std::string kind = "lobatto";
    int order = 3;
    auto* dump = app.add_subcommand("dump-quadrature", "Print a reference quadrature rule on [0,1] as CSV");
    dump->add_option("--kind", kind, "gauss or lobatto")->check(CLI::IsMember({"gauss", "lobatto"}));
    dump->add_option("--order", order, "Number of points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : bpdg::kExitConfig;
    }

    try {
        if (*run) {
            const bpdg::RunConfig config = bpdg::load_config(config_path);
            const auto result = bpdg::run(config, threads, out_dir);
            if (result.exit_code != bpdg::kExitOk) {
                std::cerr << "bpdg: " << result.message << '\n';
                return result.exit_code;
            }
            std::printf("completed %d steps, t = %.17g\n", result.steps, result.t);
            return bpdg::kExitOk;
        }
        if (*check) return cmd_check(check_path);
        if (*dump) return cmd_dump(kind, order);
    } catch (const bpdg::ConfigError& e) {
        std::cerr << "bpdg: configuration error: " << e.what() << '\n';
        return bpdg::kExitConfig;
    } catch (const bpdg::StallError& e) {
        std::cerr << "bpdg: stall: " << e.what() << '\n';
        return bpdg::kExitStall;
    } catch (const bpdg::PositivityError& e) {
        std::cerr << "bpdg: positivity violation: " << e.what() << '\n';
        return bpdg::kExitPositivity;
    }
    return bpdg::kExitOk;
}
