#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "coherency/errors.hpp"
#include "coherency/pipeline.hpp"

namespace {

int run(int argc, char** argv) {
    CLI::App app{"Generator coherency analysis: swing-equation simulation, "
                 "synchronization-coefficient and correlation matrices, modularity "
                 "clustering, grid integrity indices"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "Integrate a scenario and write the trajectory");
    std::string scenario_path, sim_out;
    sim->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    sim->add_option("--out", sim_out, "Output directory")->required();

    auto* analyze = app.add_subcommand("analyze", "Indices and partitions over a trajectory");
    std::string traj_path, network_path, analyze_out, matrix_path;
    coherency::AnalyzeOptions opts;
    analyze->add_option("--trajectory", traj_path, "Trajectory CSV");
    analyze->add_option("--network", network_path,
                        "Network JSON or segment manifest from simulate");
    analyze->add_option("--matrix", matrix_path,
                        "Bypass: analyze one matrix CSV as a single snapshot");
    analyze->add_option("--out", analyze_out, "Output directory")->required();
    analyze->add_option("--method", opts.method, "ks or cc")->check(CLI::IsMember({"ks", "cc"}));
    analyze->add_option("--cc-window", opts.cc_window, "Correlation window length");
    analyze->add_option("--stride", opts.stride, "Analyze every stride-th sample");
    analyze->add_option("--jobs", opts.jobs, "Concurrent snapshot analyses");
    analyze->add_flag("--dump-matrices", opts.dump_matrices, "Write per-snapshot matrices");

    auto* clusterc = app.add_subcommand("cluster", "Cluster a matrix CSV into coherent groups");
    std::string cluster_matrix, cluster_out;
    clusterc->add_option("--matrix", cluster_matrix, "Matrix CSV")->required();
    clusterc->add_option("--out", cluster_out, "Partition JSON path")->required();

    auto* ccc = app.add_subcommand("cc", "Correlation matrix over a trailing window");
    std::string cc_traj, cc_out;
    double cc_t_end = 0.0;
    std::size_t cc_window = coherency::kDefaultCcWindow;
    ccc->add_option("--trajectory", cc_traj, "Trajectory CSV")->required();
    ccc->add_option("--t-end", cc_t_end, "Window end time, seconds")->required();
    ccc->add_option("--window", cc_window, "Window length in samples");
    ccc->add_option("--out", cc_out, "Matrix CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints help or the parse diagnostic
        return code == 0 ? 0 : 1;
    }

    if (sim->parsed()) {
        auto warnings = coherency::cmd_simulate(scenario_path, sim_out);
        for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    } else if (analyze->parsed()) {
        bool have_matrix = !matrix_path.empty();
        bool have_traj = !traj_path.empty();
        if (have_matrix == have_traj)
            throw coherency::InputError("analyze needs exactly one of --trajectory or --matrix");
        if (have_matrix)
            coherency::cmd_analyze_matrix(matrix_path, analyze_out);
        else
            coherency::cmd_analyze(traj_path, network_path, analyze_out, opts);
    } else if (clusterc->parsed()) {
        coherency::cmd_cluster(cluster_matrix, cluster_out);
    } else if (ccc->parsed()) {
        coherency::cmd_cc(cc_traj, cc_t_end, cc_window, cc_out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const coherency::InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const coherency::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
