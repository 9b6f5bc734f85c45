// Command-line front end: run one experiment from a JSON config (with flag
// overrides), pre-generate datasets, or render report folders as tables.
//
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "qtf/bench.hpp"
#include "qtf/errors.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;

struct RunArgs {
    std::string config_path;
    // Flag overrides; unset optionals leave the config file value alone.
    std::optional<std::string> task;
    std::optional<std::string> method;
    std::optional<uint64_t> seed;
    std::optional<double> kappa;
    std::optional<double> mu;
    std::optional<int> d;
    std::optional<int> t_iters;
    std::optional<int> epochs;
    std::optional<int> eig_epochs;
    std::optional<std::string> kernel;
    std::optional<std::string> data_dir;
    std::optional<std::string> output_dir;
    std::optional<int> n_mnist;
    std::optional<int> n_usps;
    bool full_scale = false;
    std::string reported_baselines;
};

qtf::ExperimentConfig build_config(const RunArgs& args) {
    qtf::ExperimentConfig config;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw qtf::DataError("cannot open config: " + args.config_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        config = qtf::config_from_json(buf.str());
    }
    if (args.task) config.task = qtf::parse_task(*args.task);
    if (args.method) config.method = qtf::parse_method(*args.method);
    if (args.seed) config.seed = *args.seed;
    if (args.kappa) config.kappa = *args.kappa;
    if (args.mu) config.mu = *args.mu;
    if (args.d) config.d = *args.d;
    if (args.t_iters) config.t_iters = *args.t_iters;
    if (args.epochs) config.epochs = *args.epochs;
    if (args.eig_epochs) config.eig_epochs = *args.eig_epochs;
    if (args.kernel) {
        if (*args.kernel == "linear") {
            config.kernel = qtf::KernelSpec::linear();
        } else if (*args.kernel == "rbf") {
            config.kernel = qtf::KernelSpec::rbf(config.kernel.bandwidth);
        } else {
            throw qtf::ParameterError("kernel must be 'linear' or 'rbf'");
        }
    }
    if (args.data_dir) config.data_dir = *args.data_dir;
    if (args.output_dir) config.output_dir = *args.output_dir;
    if (args.n_mnist) config.n_mnist = *args.n_mnist;
    if (args.n_usps) config.n_usps = *args.n_usps;
    if (args.full_scale) config.full_scale = true;
    return config;
}

int cmd_run(const RunArgs& args) {
    const qtf::ExperimentConfig config = build_config(args).resolved();
    const qtf::AccuracyReport report = qtf::run_experiment(config);

    std::vector<qtf::AccuracyReport> reports{report};
    qtf::emit_report(reports, qtf::ReportFormat::Csv, config.output_dir);
    const std::string json_path =
        qtf::emit_report(reports, qtf::ReportFormat::Json, config.output_dir);
    qtf::emit_report(reports, qtf::ReportFormat::Markdown, config.output_dir,
                     args.reported_baselines);

    std::cout << qtf::method_name(config.method) << " on "
              << qtf::task_name(config.task) << ": accuracy "
              << 100.0 * report.accuracy << "% (seed " << config.seed << ", "
              << report.wall_ms << " ms)\nreports written next to "
              << json_path << "\n";
    return kExitOk;
}

int cmd_gen_data(const std::string& out_dir, uint64_t seed,
                 const qtf::SyntheticSpec& spec) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    auto [a_to_b, b_to_a] = qtf::gen_synthetic(spec, seed);
    const fs::path dir(out_dir);
    std::ostringstream suffix;
    suffix << "_s" << seed << ".qtfb";
    const std::string path_a = (dir / ("synthetic_a_to_b" + suffix.str())).string();
    const std::string path_b = (dir / ("synthetic_b_to_a" + suffix.str())).string();
    qtf::save_bundle(path_a, a_to_b);
    qtf::save_bundle(path_b, b_to_a);
    std::cout << "wrote " << path_a << "\nwrote " << path_b << "\n";
    return kExitOk;
}

int cmd_table(const std::string& in_dir, const std::string& format,
              const std::string& reported_baselines) {
    const std::string json_path =
        (std::filesystem::path(in_dir) / "results.json").string();
    const std::vector<qtf::AccuracyReport> reports = qtf::load_reports(json_path);
    qtf::ReportFormat fmt;
    if (format == "md" || format == "markdown") {
        fmt = qtf::ReportFormat::Markdown;
    } else if (format == "csv") {
        fmt = qtf::ReportFormat::Csv;
    } else if (format == "json") {
        fmt = qtf::ReportFormat::Json;
    } else {
        throw qtf::ParameterError("format must be md, csv or json");
    }
    const std::string path =
        qtf::emit_report(reports, fmt, in_dir, reported_baselines);
    std::ifstream render(path);
    std::cout << render.rdbuf();
    std::cout << "written to " << path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"distribution-alignment transfer-learning benchmarks"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "run one experiment");
    run->add_option("--config", run_args.config_path, "JSON config file");
    run->add_option("--task", run_args.task,
                    "sa_to_sb | sb_to_sa | mnist_to_usps | usps_to_mnist");
    run->add_option("--method", run_args.method,
                    "NA | TCA | JDA | BDA | VQTF | QBLAS-REF");
    run->add_option("--seed", run_args.seed, "RNG seed");
    run->add_option("--kappa", run_args.kappa, "balance knob in [0,1]");
    run->add_option("--mu", run_args.mu, "regularization weight");
    run->add_option("--d", run_args.d, "subspace dimension (-1 = auto)");
    run->add_option("--t-iters", run_args.t_iters,
                    "pseudo-label refinement iterations (-1 = auto)");
    run->add_option("--epochs", run_args.epochs, "classifier epochs");
    run->add_option("--eig-epochs", run_args.eig_epochs,
                    "eigensolver epochs per level");
    run->add_option("--kernel", run_args.kernel, "linear | rbf");
    run->add_option("--data-dir", run_args.data_dir, "dataset directory");
    run->add_option("--output-dir", run_args.output_dir, "report directory");
    run->add_option("--n-mnist", run_args.n_mnist, "MNIST subsample size");
    run->add_option("--n-usps", run_args.n_usps, "USPS subsample size");
    run->add_flag("--full", run_args.full_scale,
                  "full-scale digit subsamples (2000/1800)");
    run->add_option("--reported", run_args.reported_baselines,
                    "CSV of externally reported baselines for the table");

    std::string gen_out = "data";
    uint64_t gen_seed = 7;
    qtf::SyntheticSpec gen_spec;
    CLI::App* gen = app.add_subcommand("gen-data",
                                       "generate and cache synthetic bundles");
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--n", gen_spec.n_per_domain, "samples per domain");
    gen->add_option("--dim", gen_spec.dim, "feature dimension (power of two)");
    gen->add_option("--classes", gen_spec.classes, "class count");
    gen->add_option("--class-shift", gen_spec.class_shift,
                    "per-class mean offset (fraction of the domain std)");
    gen->add_option("--class-width-ratio", gen_spec.class_width_ratio,
                    "last class's spread relative to the first's");

    std::string table_in = "reports";
    std::string table_format = "md";
    std::string table_reported;
    CLI::App* table = app.add_subcommand(
        "table", "render a report directory's results.json");
    table->add_option("--in", table_in, "report directory");
    table->add_option("--format", table_format, "md | csv | json");
    table->add_option("--reported", table_reported,
                      "CSV of externally reported baselines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (gen->parsed()) return cmd_gen_data(gen_out, gen_seed, gen_spec);
        if (table->parsed()) return cmd_table(table_in, table_format,
                                              table_reported);
        return kExitConfigError;
    } catch (const qtf::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const qtf::ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const qtf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitConfigError;
    }
}
