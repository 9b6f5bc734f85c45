#include "qtf/bench.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "qtf/dda.hpp"
#include "qtf/errors.hpp"
#include "qtf/qblas.hpp"
#include "qtf/vqtf.hpp"

namespace qtf {

namespace {

using nlohmann::json;

constexpr MethodId kMethodOrder[] = {MethodId::Na,  MethodId::Tca,
                                     MethodId::Jda, MethodId::Bda,
                                     MethodId::Vqtf, MethodId::QblasRef};

std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

/// Scoring probe: copies the held-out labels once at construction so fit
/// paths can be audited for zero truth reads on the bundle itself.
class Scorer {
  public:
    explicit Scorer(const DatasetBundle& bundle) : truth_(bundle.truth()) {}

    double operator()(const LabelVector& predicted) const {
        return accuracy(predicted.labels, truth_.labels);
    }

  private:
    LabelVector truth_;
};

} // namespace

std::string task_name(TaskId task) {
    switch (task) {
        case TaskId::SaToSb: return "sa_to_sb";
        case TaskId::SbToSa: return "sb_to_sa";
        case TaskId::MnistToUsps: return "mnist_to_usps";
        case TaskId::UspsToMnist: return "usps_to_mnist";
    }
    throw ParameterError("unknown task id");
}

std::string task_display(TaskId task) {
    switch (task) {
        case TaskId::SaToSb: return "S_A -> S_B";
        case TaskId::SbToSa: return "S_B -> S_A";
        case TaskId::MnistToUsps: return "MNIST -> USPS";
        case TaskId::UspsToMnist: return "USPS -> MNIST";
    }
    throw ParameterError("unknown task id");
}

std::string method_name(MethodId method) {
    switch (method) {
        case MethodId::Na: return "NA";
        case MethodId::Tca: return "TCA";
        case MethodId::Jda: return "JDA";
        case MethodId::Bda: return "BDA";
        case MethodId::Vqtf: return "VQTF";
        case MethodId::QblasRef: return "QBLAS-REF";
    }
    throw ParameterError("unknown method id");
}

TaskId parse_task(const std::string& name) {
    for (TaskId t : kAllTasks) {
        if (name == task_name(t)) return t;
    }
    throw ParameterError("unknown task: " + name +
                         " (expected sa_to_sb, sb_to_sa, mnist_to_usps, "
                         "usps_to_mnist)");
}

MethodId parse_method(const std::string& name) {
    for (MethodId m : kMethodOrder) {
        if (name == method_name(m)) return m;
    }
    throw ParameterError("unknown method: " + name +
                         " (expected NA, TCA, JDA, BDA, VQTF, QBLAS-REF)");
}

bool is_digit_task(TaskId task) {
    return task == TaskId::MnistToUsps || task == TaskId::UspsToMnist;
}

ExperimentConfig ExperimentConfig::resolved() const {
    ExperimentConfig r = *this;
    if (r.d < 0) r.d = is_digit_task(r.task) ? 20 : 2;
    if (r.t_iters < 0) r.t_iters = (r.method == MethodId::Vqtf) ? 5 : 10;
    if (r.full_scale) {
        r.n_mnist = 2000;
        r.n_usps = 1800;
    }
    return r;
}

DatasetBundle resolve_dataset(const ExperimentConfig& raw_config) {
    const ExperimentConfig config = raw_config.resolved();
    if (!is_digit_task(config.task)) {
        auto [a_to_b, b_to_a] = gen_synthetic(config.synthetic, config.seed);
        return config.task == TaskId::SaToSb ? std::move(a_to_b)
                                             : std::move(b_to_a);
    }

    namespace fs = std::filesystem;
    std::ostringstream stem;
    stem << "_" << config.n_mnist << "_" << config.n_usps << "_s" << config.seed
         << ".qtfb";
    const fs::path dir(config.data_dir);
    const fs::path mu_path = dir / ("mnist_to_usps" + stem.str());
    const fs::path um_path = dir / ("usps_to_mnist" + stem.str());
    const fs::path wanted =
        config.task == TaskId::MnistToUsps ? mu_path : um_path;
    if (fs::exists(wanted)) return load_bundle(wanted.string());

    const fs::path mnist_images = dir / "train-images-idx3-ubyte";
    const fs::path mnist_labels = dir / "train-labels-idx1-ubyte";
    const fs::path usps_text = dir / "usps.txt";
    if (!fs::exists(mnist_images) || !fs::exists(mnist_labels) ||
        !fs::exists(usps_text)) {
        throw DataError(
            "digit data not found under '" + config.data_dir +
            "': need train-images-idx3-ubyte, train-labels-idx1-ubyte and "
            "usps.txt (see tools/fetch_digits.sh), or a cached " +
            wanted.filename().string());
    }

    const DigitImages mnist =
        load_mnist_idx(mnist_images.string(), mnist_labels.string());
    const DigitImages usps = load_usps(usps_text.string());
    auto [mu, um] = preprocess_digits(mnist, usps, config.n_mnist, config.n_usps,
                                      config.seed);
    save_bundle(mu_path.string(), mu);
    save_bundle(um_path.string(), um);
    return config.task == TaskId::MnistToUsps ? std::move(mu) : std::move(um);
}

AccuracyReport run_on_bundle(const ExperimentConfig& raw_config,
                             const DatasetBundle& bundle) {
    const ExperimentConfig config = raw_config.resolved();
    AccuracyReport report;
    report.config = config;

    const Scorer scorer(bundle);
    const long accesses_before_fit = bundle.truth_accesses;

    std::vector<double> accuracy_trace;
    const IterationEvaluator evaluator = [&](const LabelVector& y_target) {
        const double a = scorer(y_target);
        accuracy_trace.push_back(a);
        return a;
    };

    const auto t0 = std::chrono::steady_clock::now();
    LabelVector predicted;
    switch (config.method) {
        case MethodId::Na: {
            predicted = knn_predict(bundle.x.source(), bundle.y_s,
                                    bundle.x.target());
            break;
        }
        case MethodId::Tca:
        case MethodId::Jda:
        case MethodId::Bda: {
            DdaConfig dda;
            dda.variant = config.method == MethodId::Tca   ? DdaVariant::Tca
                          : config.method == MethodId::Jda ? DdaVariant::Jda
                                                           : DdaVariant::Bda;
            dda.kernel = config.kernel;
            dda.kappa = config.kappa;
            dda.mu = config.mu;
            dda.d = config.d;
            dda.t_iters = config.t_iters;
            DdaHistory history;
            predicted =
                dda_fit_predict(bundle.x, bundle.y_s, dda, &history, evaluator)
                    .first;
            report.objective_trace = history.objective;
            break;
        }
        case MethodId::Vqtf: {
            VqtfConfig vq;
            vq.kernel = config.kernel;
            vq.kappa = config.kappa;
            vq.mu = config.mu;
            vq.d = config.d;
            vq.t_iters = config.t_iters;
            vq.seed = config.seed;
            vq.eig.layers = config.layers;
            vq.eig.epochs_per_level = config.eig_epochs;
            vq.eig.restarts = config.eig_restarts;
            vq.eig.learning_rate = config.eig_learning_rate;
            vq.eig.alpha_deflate = config.alpha_deflate;
            vq.eig.literal_penalty = config.literal_penalty;
            vq.classifier.layers = config.layers;
            vq.classifier.train.epochs = config.epochs;
            vq.classifier.train.learning_rate = config.learning_rate;
            auto [preds, history] = vqtf_fit_predict(bundle.x, bundle.y_s, vq,
                                                     evaluator);
            predicted = std::move(preds);
            for (const VqtfIterationRecord& it : history.iterations) {
                double final_loss_sum = 0.0;
                for (const auto& trace : it.loss_traces) {
                    if (!trace.empty()) final_loss_sum += trace.back();
                }
                report.objective_trace.push_back(final_loss_sum);
            }
            break;
        }
        case MethodId::QblasRef: {
            QblasConfig qb;
            qb.kernel = config.kernel;
            qb.kappa = config.kappa;
            qb.mu = config.mu;
            qb.d = config.d;
            qb.t_iters = config.t_iters;
            qb.gamma3 = config.gamma3;
            qb.eta = config.eta;
            qb.drop_null_space = config.drop_null_space;
            QblasHistory history;
            predicted =
                qblas_tf_reference(bundle.x, bundle.y_s, qb, &history, evaluator)
                    .first;
            for (const VectorXd& ev : history.selected_eigvals) {
                report.objective_trace.push_back(ev.sum());
            }
            break;
        }
    }
    const auto t1 = std::chrono::steady_clock::now();

    report.truth_reads_during_fit = bundle.truth_accesses - accesses_before_fit;
    report.accuracy = scorer(predicted);
    if (accuracy_trace.empty()) accuracy_trace.push_back(report.accuracy);
    report.accuracy_trace = std::move(accuracy_trace);
    report.wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    return report;
}

AccuracyReport run_experiment(const ExperimentConfig& config) {
    const DatasetBundle bundle = resolve_dataset(config);
    return run_on_bundle(config, bundle);
}

namespace {

json config_to_json_obj(const ExperimentConfig& c) {
    json j;
    j["task"] = task_name(c.task);
    j["method"] = method_name(c.method);
    j["seed"] = c.seed;
    j["kernel"] = c.kernel.kind == KernelSpec::Kind::Linear ? "linear" : "rbf";
    j["bandwidth"] = c.kernel.bandwidth;
    j["kappa"] = c.kappa;
    j["mu"] = c.mu;
    j["d"] = c.d;
    j["t_iters"] = c.t_iters;
    j["layers"] = c.layers;
    j["epochs"] = c.epochs;
    j["learning_rate"] = c.learning_rate;
    j["eig_epochs"] = c.eig_epochs;
    j["eig_restarts"] = c.eig_restarts;
    j["eig_learning_rate"] = c.eig_learning_rate;
    j["alpha_deflate"] = c.alpha_deflate;
    j["literal_penalty"] = c.literal_penalty;
    j["gamma3"] = c.gamma3;
    j["eta"] = c.eta;
    j["drop_null_space"] = c.drop_null_space;
    j["synthetic"] = {{"n_per_domain", c.synthetic.n_per_domain},
                      {"dim", c.synthetic.dim},
                      {"mean_a", c.synthetic.mean_a},
                      {"std_a", c.synthetic.std_a},
                      {"mean_b", c.synthetic.mean_b},
                      {"std_b", c.synthetic.std_b},
                      {"classes", c.synthetic.classes},
                      {"class_shift", c.synthetic.class_shift},
                      {"class_width_ratio", c.synthetic.class_width_ratio}};
    j["n_mnist"] = c.n_mnist;
    j["n_usps"] = c.n_usps;
    j["full"] = c.full_scale;
    j["data_dir"] = c.data_dir;
    j["output_dir"] = c.output_dir;
    return j;
}

template <typename T>
void take(json& obj, const char* key, T& out) {
    if (auto it = obj.find(key); it != obj.end()) {
        out = it->get<T>();
        obj.erase(it);
    }
}

void reject_leftovers(const json& obj, const char* where) {
    if (!obj.empty()) {
        throw ParameterError(std::string("unknown ") + where +
                             " key: " + obj.begin().key());
    }
}

ExperimentConfig config_from_json_obj(json j) {
    if (!j.is_object()) throw ParameterError("config must be a JSON object");
    ExperimentConfig c;
    std::string task = task_name(c.task);
    std::string method = method_name(c.method);
    std::string kernel =
        c.kernel.kind == KernelSpec::Kind::Linear ? "linear" : "rbf";
    take(j, "task", task);
    take(j, "method", method);
    take(j, "seed", c.seed);
    take(j, "kernel", kernel);
    take(j, "bandwidth", c.kernel.bandwidth);
    take(j, "kappa", c.kappa);
    take(j, "mu", c.mu);
    take(j, "d", c.d);
    take(j, "t_iters", c.t_iters);
    take(j, "layers", c.layers);
    take(j, "epochs", c.epochs);
    take(j, "learning_rate", c.learning_rate);
    take(j, "eig_epochs", c.eig_epochs);
    take(j, "eig_restarts", c.eig_restarts);
    take(j, "eig_learning_rate", c.eig_learning_rate);
    take(j, "alpha_deflate", c.alpha_deflate);
    take(j, "literal_penalty", c.literal_penalty);
    take(j, "gamma3", c.gamma3);
    take(j, "eta", c.eta);
    take(j, "drop_null_space", c.drop_null_space);
    if (auto it = j.find("synthetic"); it != j.end()) {
        json s = *it;
        j.erase(it);
        if (!s.is_object()) throw ParameterError("'synthetic' must be an object");
        take(s, "n_per_domain", c.synthetic.n_per_domain);
        take(s, "dim", c.synthetic.dim);
        take(s, "mean_a", c.synthetic.mean_a);
        take(s, "std_a", c.synthetic.std_a);
        take(s, "mean_b", c.synthetic.mean_b);
        take(s, "std_b", c.synthetic.std_b);
        take(s, "classes", c.synthetic.classes);
        take(s, "class_shift", c.synthetic.class_shift);
        take(s, "class_width_ratio", c.synthetic.class_width_ratio);
        reject_leftovers(s, "synthetic");
    }
    take(j, "n_mnist", c.n_mnist);
    take(j, "n_usps", c.n_usps);
    take(j, "full", c.full_scale);
    take(j, "data_dir", c.data_dir);
    take(j, "output_dir", c.output_dir);
    reject_leftovers(j, "config");

    c.task = parse_task(task);
    c.method = parse_method(method);
    if (kernel == "linear") {
        c.kernel.kind = KernelSpec::Kind::Linear;
    } else if (kernel == "rbf") {
        c.kernel.kind = KernelSpec::Kind::Rbf;
    } else {
        throw ParameterError("kernel must be 'linear' or 'rbf', got " + kernel);
    }
    return c;
}

json report_to_json_obj(const AccuracyReport& r) {
    json canonical;
    canonical["method"] = method_name(r.config.method);
    canonical["task"] = task_name(r.config.task);
    canonical["accuracy"] = r.accuracy;
    canonical["seed"] = r.config.seed;
    canonical["config"] = config_to_json_obj(r.config);
    canonical["accuracy_trace"] = r.accuracy_trace;
    canonical["objective_trace"] = r.objective_trace;
    canonical["truth_reads_during_fit"] = r.truth_reads_during_fit;
    json informational;
    informational["wall_ms"] = r.wall_ms;
    informational["version"] = r.version;
    return json{{"canonical", canonical}, {"informational", informational}};
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

struct TableRows {
    // row label -> task key -> percent cell
    std::vector<std::pair<std::string, std::map<std::string, std::string>>> rows;

    std::map<std::string, std::string>& row(const std::string& label) {
        for (auto& [name, cells] : rows) {
            if (name == label) return cells;
        }
        rows.emplace_back(label, std::map<std::string, std::string>{});
        return rows.back().second;
    }
};

void merge_reported_baselines(TableRows& table, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read reported-baselines file: " + path);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        if (first) {  // header row
            first = false;
            continue;
        }
        std::istringstream ls(line);
        std::string method, task, pct;
        if (!std::getline(ls, method, ',') || !std::getline(ls, task, ',') ||
            !std::getline(ls, pct, ',')) {
            throw DataError("reported-baselines rows need method,task,percent");
        }
        parse_task(task);  // validates the key
        table.row(method + " (reported)")[task] = pct;
    }
}

} // namespace

std::string config_to_json(const ExperimentConfig& config) {
    return config_to_json_obj(config).dump(2);
}

ExperimentConfig config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParameterError(std::string("config is not valid JSON: ") +
                             e.what());
    }
    try {
        return config_from_json_obj(std::move(j));
    } catch (const json::exception& e) {
        throw ParameterError(std::string("config field has wrong type: ") +
                             e.what());
    }
}

std::string emit_report(const std::vector<AccuracyReport>& reports,
                        ReportFormat format, const std::string& out_dir,
                        const std::string& reported_baselines) {
    if (reports.empty()) throw ParameterError("no reports to emit");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);  // pre-existing dir is fine

    if (format == ReportFormat::Csv) {
        const fs::path path = fs::path(out_dir) / "results.csv";
        auto out = open_for_write(path);
        out << "method,task,accuracy,seed,wall_ms\n";
        for (const AccuracyReport& r : reports) {
            out << method_name(r.config.method) << ","
                << task_name(r.config.task) << ","
                << format_double("%.6f", r.accuracy) << "," << r.config.seed
                << "," << format_double("%.3f", r.wall_ms) << "\n";
        }
        return path.string();
    }

    if (format == ReportFormat::Json) {
        const fs::path path = fs::path(out_dir) / "results.json";
        json arr = json::array();
        for (const AccuracyReport& r : reports) arr.push_back(report_to_json_obj(r));
        auto out = open_for_write(path);
        out << arr.dump(2) << "\n";
        return path.string();
    }

    // Markdown table, one row per method, fixed task-column order.
    TableRows table;
    for (MethodId m : kMethodOrder) {
        for (const AccuracyReport& r : reports) {
            if (r.config.method != m) continue;
            table.row(method_name(m))[task_name(r.config.task)] =
                format_double("%.2f", 100.0 * r.accuracy);
        }
    }
    if (!reported_baselines.empty()) {
        merge_reported_baselines(table, reported_baselines);
    }

    const fs::path path = fs::path(out_dir) / "results.md";
    auto out = open_for_write(path);
    out << "| method |";
    for (TaskId t : kAllTasks) out << " " << task_display(t) << " |";
    out << "\n|---|";
    for (size_t i = 0; i < std::size(kAllTasks); ++i) out << "---|";
    out << "\n";
    for (const auto& [label, cells] : table.rows) {
        out << "| " << label << " |";
        for (TaskId t : kAllTasks) {
            const auto it = cells.find(task_name(t));
            out << " " << (it == cells.end() ? std::string("-") : it->second)
                << " |";
        }
        out << "\n";
    }
    return path.string();
}

std::vector<AccuracyReport> load_reports(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw DataError("cannot read " + json_path);
    json arr;
    try {
        in >> arr;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed report file: ") + e.what());
    }
    if (!arr.is_array()) throw DataError("report file must hold a JSON array");

    std::vector<AccuracyReport> reports;
    try {
        for (const json& item : arr) {
            AccuracyReport r;
            const json& canonical = item.at("canonical");
            r.config = config_from_json_obj(canonical.at("config"));
            r.accuracy = canonical.at("accuracy").get<double>();
            r.accuracy_trace =
                canonical.at("accuracy_trace").get<std::vector<double>>();
            r.objective_trace =
                canonical.at("objective_trace").get<std::vector<double>>();
            r.truth_reads_during_fit =
                canonical.at("truth_reads_during_fit").get<long>();
            const json& informational = item.at("informational");
            r.wall_ms = informational.at("wall_ms").get<double>();
            r.version = informational.at("version").get<std::string>();
            reports.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("report file missing fields: ") + e.what());
    }
    return reports;
}

} // namespace qtf
