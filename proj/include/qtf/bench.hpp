#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qtf/data_io.hpp"
#include "qtf/kernel.hpp"

namespace qtf {

inline constexpr const char kVersionStamp[] = "qtf-bench 1.0";

/// Transfer direction. Synthetic pairs are generated on the fly; the digit
/// pairs need cached or raw data files under ExperimentConfig::data_dir.
enum class TaskId { SaToSb, SbToSa, MnistToUsps, UspsToMnist };

/// NA is the no-adaptation nearest-neighbor baseline. QblasRef is the
/// classical reference of the spectral-construction pipeline.
enum class MethodId { Na, Tca, Jda, Bda, Vqtf, QblasRef };

inline constexpr TaskId kAllTasks[] = {TaskId::SaToSb, TaskId::SbToSa,
                                       TaskId::MnistToUsps, TaskId::UspsToMnist};

std::string task_name(TaskId task);        // stable key, e.g. "sa_to_sb"
std::string task_display(TaskId task);     // table heading, e.g. "S_A -> S_B"
std::string method_name(MethodId method);  // "NA", "TCA", ...
TaskId parse_task(const std::string& name);
MethodId parse_method(const std::string& name);
bool is_digit_task(TaskId task);

struct ExperimentConfig {
    TaskId task = TaskId::SaToSb;
    MethodId method = MethodId::Vqtf;
    uint64_t seed = 7;

    KernelSpec kernel = KernelSpec::rbf();
    double kappa = 0.5;  // balance knob (BDA / variational / spectral paths)
    double mu = 1.0;
    int d = -1;        // -1: 2 on synthetic tasks, 20 on digit tasks
    int t_iters = -1;  // -1: 10 for classical methods, 5 for the variational one

    // Variational knobs.
    int layers = 3;
    int epochs = 200;              // cascade-classifier epochs per stage
    double learning_rate = 0.01;   // cascade-classifier step size
    int eig_epochs = 500;
    int eig_restarts = 3;
    double eig_learning_rate = 0.05;
    double alpha_deflate = 0.0;    // 0 = adaptive
    bool literal_penalty = false;

    // Spectral-reference knobs.
    double gamma3 = 0.0;  // 0 = default scaling
    double eta = 0.0;     // 0 = default shift
    bool drop_null_space = true;

    // Data resolution.
    SyntheticSpec synthetic;
    int n_mnist = 500;
    int n_usps = 450;
    bool full_scale = false;  // raises the subsamples to 2000 / 1800
    std::string data_dir = "data";
    std::string output_dir = "reports";

    /// Copy with every -1 / auto field replaced by its effective value.
    ExperimentConfig resolved() const;
};

struct AccuracyReport {
    ExperimentConfig config;  // resolved echo
    double accuracy = 0.0;
    std::vector<double> accuracy_trace;   // scoring probe per iteration
    std::vector<double> objective_trace;  // method objective per iteration
    double wall_ms = 0.0;                 // informational, non-canonical
    long truth_reads_during_fit = 0;      // must stay 0
    std::string version = kVersionStamp;
};

/// Resolve the configured dataset: synthetic tasks are generated from the
/// seed; digit tasks load a cached bundle from data_dir or build one from
/// raw files (IDX pair + 257-column text) and cache it.
DatasetBundle resolve_dataset(const ExperimentConfig& config);

/// Fit the configured method on the bundle (fit paths never see target
/// truth) and score the predictions against the held-out labels.
AccuracyReport run_on_bundle(const ExperimentConfig& config,
                             const DatasetBundle& bundle);

/// resolve_dataset + run_on_bundle.
AccuracyReport run_experiment(const ExperimentConfig& config);

std::string config_to_json(const ExperimentConfig& config);
/// Strict parse: unknown keys are rejected so typos cannot silently fall
/// back to defaults.
ExperimentConfig config_from_json(const std::string& json_text);

enum class ReportFormat { Csv, Json, Markdown };

/// Writes results.csv / results.json / results.md under out_dir and returns
/// the path written. reported_baselines may name a CSV
/// (method,task,accuracy_percent) of externally reported numbers; the
/// markdown emitter merges them as "(reported)" rows.
std::string emit_report(const std::vector<AccuracyReport>& reports,
                        ReportFormat format, const std::string& out_dir,
                        const std::string& reported_baselines = "");

/// Reads back a results.json produced by emit_report.
std::vector<AccuracyReport> load_reports(const std::string& json_path);

} // namespace qtf
