#pragma once

#include <string>
#include <vector>

#include "qtf/optimizer.hpp"
#include "qtf/qsim.hpp"
#include "qtf/types.hpp"

namespace qtf {

/// One binary stage of the cascade: a variational circuit scored by the
/// probability of reading qubit 0 as |1>, plus a trained bias, compared
/// against a class-frequency threshold.
struct BinaryVqcModel {
    enum class Mode {
        Trained,       // score = P(1) + bias
        AlwaysAssign,  // degenerate pool: every sample was positive
        NeverAssign,   // degenerate pool: no positive samples
    };

    VectorXd theta;
    double bias = 0.0;
    double threshold = 0.5;   // positives / pool size at fit time
    int class_id = 0;
    int q = 1;
    int layers = 1;
    Mode mode = Mode::Trained;

    AnsatzCircuit circuit() const;
};

/// C-1 binary stages over ascending class labels; samples surviving every
/// stage receive the final (residual) class.
struct CascadeModel {
    std::vector<BinaryVqcModel> stages;
    std::vector<int> class_order;

    int num_classes() const { return static_cast<int>(class_order.size()); }
    int residual_class() const { return class_order.back(); }
};

struct VqcConfig {
    int layers = 3;
    TrainConfig train;
};

struct BinaryTrainReport {
    std::vector<double> loss;   // per epoch, entry 0 = pre-training loss
    bool degenerate_pool = false;
};

/// P(qubit 0 = |1>) + bias for the amplitude-encoded feature vector.
double score(const BinaryVqcModel& model, const VectorXd& x);

/// Fit one binary stage on columns of z with targets y01 in {0, 1}
/// (1 = sample belongs to class_id). Loss: 0.5 * sum (P(1) + b - y)^2,
/// minimized full-batch. Throws DegenerateDataError when only one class is
/// present.
BinaryVqcModel train_binary(const MatrixXd& z, const std::vector<int>& y01,
                            int class_id, const VqcConfig& config,
                            BinaryTrainReport* report = nullptr);

/// Train the full cascade on embedded source data. Stage k trains on the
/// pool of samples whose labels come at or after class_order[k]; a pool
/// containing a single class yields a constant stage (flagged in reports).
CascadeModel fit_cascade(const MatrixXd& z_source, const LabelVector& y_source,
                         const VqcConfig& config,
                         std::vector<BinaryTrainReport>* reports = nullptr);

/// Route every target column through the stages; the first stage whose
/// score exceeds its threshold claims the sample.
LabelVector predict_cascade(const CascadeModel& model, const MatrixXd& z_target);

/// Key-value text round-trip for experiment resumption.
std::string serialize_cascade(const CascadeModel& model);
CascadeModel deserialize_cascade(const std::string& text);

} // namespace qtf
