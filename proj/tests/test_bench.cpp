#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "qtf/bench.hpp"
#include "qtf/errors.hpp"

using namespace qtf;

namespace {

namespace fs = std::filesystem;

std::string temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::create_directories(p);
    return p.string();
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

AccuracyReport fake_report(MethodId method, TaskId task, double acc) {
    AccuracyReport r;
    r.config.method = method;
    r.config.task = task;
    r.config = r.config.resolved();
    r.accuracy = acc;
    r.accuracy_trace = {acc * 0.9, acc};
    r.objective_trace = {2.0, 1.5};
    r.wall_ms = 12.5;
    return r;
}

ExperimentConfig small_synthetic_config(MethodId method) {
    ExperimentConfig config;
    config.method = method;
    config.synthetic.n_per_domain = 20;
    config.t_iters = 3;
    return config;
}

} // namespace

TEST_CASE("bench names: stable keys round-trip through the parsers") {
    for (TaskId t : kAllTasks) {
        CHECK(parse_task(task_name(t)) == t);
        CHECK(!task_display(t).empty());
        CHECK(task_display(t).find("->") != std::string::npos);
    }
    const MethodId methods[] = {MethodId::Na,   MethodId::Tca, MethodId::Jda,
                                MethodId::Bda,  MethodId::Vqtf,
                                MethodId::QblasRef};
    for (MethodId m : methods) CHECK(parse_method(method_name(m)) == m);

    CHECK(task_name(TaskId::SaToSb) == "sa_to_sb");
    CHECK(method_name(MethodId::QblasRef) == "QBLAS-REF");
    CHECK(is_digit_task(TaskId::MnistToUsps));
    CHECK(is_digit_task(TaskId::UspsToMnist));
    CHECK(!is_digit_task(TaskId::SaToSb));

    CHECK_THROWS_AS(parse_task("nope"), ParameterError);
    CHECK_THROWS_AS(parse_method("nope"), ParameterError);
}

TEST_CASE("bench config: automatic fields resolve by task and method") {
    ExperimentConfig config;

    SUBCASE("embedding dimension") {
        ExperimentConfig r = config.resolved();
        CHECK(r.d == 2);
        config.task = TaskId::MnistToUsps;
        r = config.resolved();
        CHECK(r.d == 20);
        config.d = 9;
        r = config.resolved();
        CHECK(r.d == 9);
    }

    SUBCASE("iteration counts") {
        config.method = MethodId::Vqtf;
        CHECK(config.resolved().t_iters == 5);
        config.method = MethodId::Jda;
        CHECK(config.resolved().t_iters == 10);
        config.t_iters = 7;
        CHECK(config.resolved().t_iters == 7);
    }

    SUBCASE("full-scale subsamples") {
        CHECK(config.resolved().n_mnist == 500);
        CHECK(config.resolved().n_usps == 450);
        config.full_scale = true;
        CHECK(config.resolved().n_mnist == 2000);
        CHECK(config.resolved().n_usps == 1800);
    }
}

TEST_CASE("bench config: json serialization round-trip") {
    ExperimentConfig config;
    config.task = TaskId::SbToSa;
    config.method = MethodId::Bda;
    config.seed = 42;
    config.kernel = KernelSpec::linear();
    config.kappa = 0.7;
    config.d = 3;
    config.t_iters = 4;
    config.layers = 2;
    config.epochs = 50;
    config.eig_restarts = 5;
    config.gamma3 = 0.2;
    config.literal_penalty = true;
    config.synthetic.n_per_domain = 20;
    config.synthetic.class_shift = 0.5;
    config.data_dir = "somewhere/else";

    const std::string text = config_to_json(config);
    const ExperimentConfig back = config_from_json(text);

    CHECK(back.task == config.task);
    CHECK(back.method == config.method);
    CHECK(back.seed == config.seed);
    CHECK(back.kernel.kind == KernelSpec::Kind::Linear);
    CHECK(back.kappa == config.kappa);
    CHECK(back.d == config.d);
    CHECK(back.t_iters == config.t_iters);
    CHECK(back.layers == config.layers);
    CHECK(back.epochs == config.epochs);
    CHECK(back.eig_restarts == config.eig_restarts);
    CHECK(back.gamma3 == config.gamma3);
    CHECK(back.literal_penalty == config.literal_penalty);
    CHECK(back.synthetic.n_per_domain == config.synthetic.n_per_domain);
    CHECK(back.synthetic.class_shift == config.synthetic.class_shift);
    CHECK(back.data_dir == config.data_dir);

    // A second serialization of the parsed config is byte-identical.
    CHECK(config_to_json(back) == text);
}

TEST_CASE("bench config: strict parsing") {
    SUBCASE("partial configs keep defaults for omitted fields") {
        const ExperimentConfig c = config_from_json(R"({"method": "TCA"})");
        CHECK(c.method == MethodId::Tca);
        CHECK(c.task == TaskId::SaToSb);
        CHECK(c.seed == 7);
        CHECK(c.mu == 1.0);
    }

    SUBCASE("unknown top-level keys are rejected") {
        CHECK_THROWS_AS(config_from_json(R"({"methd": "TCA"})"),
                        ParameterError);
    }

    SUBCASE("unknown nested keys are rejected") {
        CHECK_THROWS_AS(
            config_from_json(R"({"synthetic": {"n_per_domian": 10}})"),
            ParameterError);
    }

    SUBCASE("invalid JSON is rejected") {
        CHECK_THROWS_AS(config_from_json("{not json"), ParameterError);
    }

    SUBCASE("wrong field types are rejected") {
        CHECK_THROWS_AS(config_from_json(R"({"seed": "abc"})"),
                        ParameterError);
        CHECK_THROWS_AS(config_from_json(R"({"synthetic": 3})"),
                        ParameterError);
    }

    SUBCASE("unknown enum values are rejected") {
        CHECK_THROWS_AS(config_from_json(R"({"kernel": "poly"})"),
                        ParameterError);
        CHECK_THROWS_AS(config_from_json(R"({"task": "a_to_b"})"),
                        ParameterError);
        CHECK_THROWS_AS(config_from_json(R"({"method": "tca"})"),
                        ParameterError);
    }
}

TEST_CASE("bench dataset resolution: synthetic tasks come from the seed") {
    ExperimentConfig config = small_synthetic_config(MethodId::Na);
    config.seed = 13;

    const DatasetBundle forward = resolve_dataset(config);
    CHECK(forward.name == "synthetic_a_to_b");
    CHECK(forward.seed == 13);
    CHECK(forward.x.n_source == 20);

    config.task = TaskId::SbToSa;
    const DatasetBundle reverse = resolve_dataset(config);
    CHECK(reverse.name == "synthetic_b_to_a");
    CHECK((forward.x.values.leftCols(20) - reverse.x.values.rightCols(20))
              .norm() == 0.0);
}

TEST_CASE("bench dataset resolution: digit tasks use the cache or fail "
          "clearly") {
    const std::string dir = temp_dir("qtf_bench_data");
    ExperimentConfig config;
    config.task = TaskId::MnistToUsps;
    config.data_dir = dir;

    SUBCASE("missing raw files raise a descriptive error") {
        CHECK_THROWS_AS(resolve_dataset(config), DataError);
    }

    SUBCASE("a cached bundle is loaded without raw files") {
        SyntheticSpec spec;
        spec.n_per_domain = 10;
        auto [bundle, unused] = gen_synthetic(spec, 3);
        const std::string cache =
            (fs::path(dir) / "mnist_to_usps_500_450_s7.qtfb").string();
        save_bundle(cache, bundle);

        const DatasetBundle loaded = resolve_dataset(config);
        CHECK((loaded.x.values - bundle.x.values).norm() == 0.0);
        CHECK(loaded.name == bundle.name);
        fs::remove(cache);
    }

    fs::remove_all(dir);
}

TEST_CASE("bench runs: baseline and classical methods on a small task") {
    ExperimentConfig config = small_synthetic_config(MethodId::Na);
    const DatasetBundle bundle = resolve_dataset(config);

    SUBCASE("no-adaptation baseline") {
        const AccuracyReport report = run_on_bundle(config, bundle);
        CHECK(report.accuracy >= 0.0);
        CHECK(report.accuracy <= 1.0);
        CHECK(report.truth_reads_during_fit == 0);
        CHECK(report.accuracy_trace.size() == 1);  // no iterative probe
        CHECK(report.objective_trace.empty());
        CHECK(report.wall_ms >= 0.0);
        CHECK(report.config.d == 2);        // resolved echo
        CHECK(report.config.t_iters == 3);
        CHECK(report.version == std::string(kVersionStamp));
    }

    SUBCASE("kernel-alignment method records per-iteration traces") {
        config.method = MethodId::Tca;
        const AccuracyReport report = run_on_bundle(config, bundle);
        CHECK(report.truth_reads_during_fit == 0);
        CHECK(report.accuracy_trace.size() == 3);
        CHECK(report.objective_trace.size() == 3);
        CHECK(report.accuracy ==
              doctest::Approx(report.accuracy_trace.back()));
    }

    SUBCASE("spectral reference method records selected spectra") {
        config.method = MethodId::QblasRef;
        const AccuracyReport report = run_on_bundle(config, bundle);
        CHECK(report.truth_reads_during_fit == 0);
        CHECK(report.accuracy_trace.size() == 3);
        CHECK(report.objective_trace.size() == 3);
    }

    SUBCASE("runs are deterministic") {
        config.method = MethodId::Jda;
        const AccuracyReport a = run_on_bundle(config, bundle);
        const AccuracyReport b = run_on_bundle(config, bundle);
        CHECK(a.accuracy == b.accuracy);
        CHECK(a.accuracy_trace == b.accuracy_trace);
        CHECK(a.objective_trace == b.objective_trace);
    }

    SUBCASE("one-call experiment equals resolve + run") {
        config.method = MethodId::Tca;
        const AccuracyReport direct = run_experiment(config);
        const AccuracyReport staged = run_on_bundle(config, bundle);
        CHECK(direct.accuracy == staged.accuracy);
        CHECK(direct.accuracy_trace == staged.accuracy_trace);
    }
}

TEST_CASE("bench runs: variational method wired end to end") {
    ExperimentConfig config = small_synthetic_config(MethodId::Vqtf);
    config.synthetic.n_per_domain = 8;
    config.t_iters = 1;
    config.layers = 2;
    config.epochs = 30;
    config.eig_epochs = 60;
    config.eig_restarts = 1;

    const AccuracyReport report = run_experiment(config);
    CHECK(report.accuracy >= 0.0);
    CHECK(report.accuracy <= 1.0);
    CHECK(report.truth_reads_during_fit == 0);
    CHECK(!report.accuracy_trace.empty());
    CHECK(report.objective_trace.size() == 1);  // one outer iteration
}

TEST_CASE("bench reports: csv emission") {
    const std::string dir = temp_dir("qtf_bench_csv");

    SUBCASE("single report gives header plus one row") {
        const std::vector<AccuracyReport> reports = {
            fake_report(MethodId::Na, TaskId::SaToSb, 0.96)};
        const std::string path = emit_report(reports, ReportFormat::Csv, dir);
        const auto lines = split_lines(read_text(path));
        REQUIRE(lines.size() == 2);
        CHECK(lines[0] == "method,task,accuracy,seed,wall_ms");
        CHECK(lines[1].find("NA,sa_to_sb,0.960000,7,") == 0);
    }

    SUBCASE("five methods over four tasks give twenty-one lines") {
        const MethodId methods[] = {MethodId::Na, MethodId::Tca, MethodId::Jda,
                                    MethodId::Bda, MethodId::Vqtf};
        std::vector<AccuracyReport> reports;
        for (MethodId m : methods) {
            for (TaskId t : kAllTasks) reports.push_back(fake_report(m, t, 0.5));
        }
        const std::string path = emit_report(reports, ReportFormat::Csv, dir);
        CHECK(split_lines(read_text(path)).size() == 21);
    }

    SUBCASE("empty report lists are refused") {
        CHECK_THROWS_AS(emit_report({}, ReportFormat::Csv, dir),
                        ParameterError);
    }

    fs::remove_all(dir);
}

TEST_CASE("bench reports: json emission round-trips through the loader") {
    const std::string dir = temp_dir("qtf_bench_json");
    std::vector<AccuracyReport> reports = {
        fake_report(MethodId::Jda, TaskId::SaToSb, 0.97),
        fake_report(MethodId::Vqtf, TaskId::SbToSa, 1.0)};
    reports[0].truth_reads_during_fit = 0;

    const std::string path = emit_report(reports, ReportFormat::Json, dir);
    const std::vector<AccuracyReport> loaded = load_reports(path);
    REQUIRE(loaded.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK(loaded[i].config.method == reports[i].config.method);
        CHECK(loaded[i].config.task == reports[i].config.task);
        CHECK(loaded[i].accuracy == reports[i].accuracy);
        CHECK(loaded[i].accuracy_trace == reports[i].accuracy_trace);
        CHECK(loaded[i].objective_trace == reports[i].objective_trace);
        CHECK(loaded[i].truth_reads_during_fit ==
              reports[i].truth_reads_during_fit);
        CHECK(loaded[i].wall_ms == doctest::Approx(reports[i].wall_ms));
        CHECK(loaded[i].version == reports[i].version);
    }

    SUBCASE("loader validation") {
        CHECK_THROWS_AS(load_reports((fs::path(dir) / "missing.json").string()),
                        DataError);
        const std::string bad = (fs::path(dir) / "bad.json").string();
        std::ofstream(bad) << "{not json";
        CHECK_THROWS_AS(load_reports(bad), DataError);
        std::ofstream(bad) << R"({"canonical": {}})";
        CHECK_THROWS_AS(load_reports(bad), DataError);
        std::ofstream(bad) << R"([{"canonical": {}}])";
        CHECK_THROWS_AS(load_reports(bad), DataError);
    }

    fs::remove_all(dir);
}

TEST_CASE("bench reports: markdown table layout and reported baselines") {
    const std::string dir = temp_dir("qtf_bench_md");
    std::vector<AccuracyReport> reports = {
        fake_report(MethodId::Tca, TaskId::SaToSb, 0.97),
        fake_report(MethodId::Na, TaskId::SaToSb, 0.96),
        fake_report(MethodId::Na, TaskId::SbToSa, 1.0)};

    SUBCASE("fixed header and method-ordered rows") {
        const std::string path =
            emit_report(reports, ReportFormat::Markdown, dir);
        const auto lines = split_lines(read_text(path));
        REQUIRE(lines.size() == 4);  // header, separator, NA, TCA
        CHECK(lines[0] ==
              "| method | S_A -> S_B | S_B -> S_A | MNIST -> USPS | "
              "USPS -> MNIST |");
        CHECK(lines[1] == "|---|---|---|---|---|");
        // Rows follow the canonical method order regardless of input order.
        CHECK(lines[2] == "| NA | 96.00 | 100.00 | - | - |");
        CHECK(lines[3] == "| TCA | 97.00 | - | - | - |");
    }

    SUBCASE("externally reported numbers merge as separate rows") {
        const std::string baselines = (fs::path(dir) / "baselines.csv").string();
        std::ofstream(baselines)
            << "method,task,accuracy_percent\nJDA,mnist_to_usps,67.28\n";
        const std::string path =
            emit_report(reports, ReportFormat::Markdown, dir, baselines);
        const auto lines = split_lines(read_text(path));
        REQUIRE(lines.size() == 5);
        CHECK(lines[4] == "| JDA (reported) | - | - | 67.28 | - |");
    }

    SUBCASE("baseline files are validated") {
        const std::string baselines = (fs::path(dir) / "bad.csv").string();
        std::ofstream(baselines) << "method,task,accuracy_percent\nJDA\n";
        CHECK_THROWS_AS(
            emit_report(reports, ReportFormat::Markdown, dir, baselines),
            DataError);
        std::ofstream(baselines)
            << "method,task,accuracy_percent\nJDA,bogus_task,50\n";
        CHECK_THROWS_AS(
            emit_report(reports, ReportFormat::Markdown, dir, baselines),
            ParameterError);
        CHECK_THROWS_AS(emit_report(reports, ReportFormat::Markdown, dir,
                                    (fs::path(dir) / "nofile.csv").string()),
                        DataError);
    }

    fs::remove_all(dir);
}
