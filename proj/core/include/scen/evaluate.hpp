#pragma once

#include <filesystem>
#include <vector>

#include "scen/dataset.hpp"
#include "scen/model.hpp"

namespace scen {

/// Per-test-image scores over every candidate pair of the test space.
/// Columns are sorted by (state_id, object_id); argmax ties break toward
/// the lowest column index.
struct ScoreMatrix {
    Tensor scores;                                // [n_images, n_pairs]
    std::vector<CompositionLabel> candidate_pairs;  // sorted
    std::vector<char> is_unseen_pair;               // per column
    std::vector<CompositionLabel> truth;            // per row
};

struct CurvePoint {
    double bias = 0.0;  // +-inf at the sentinels
    double seen_acc = 0.0;
    double unseen_acc = 0.0;
};

struct EvalReport {
    double auc = 0.0;
    double best_hm = 0.0;
    double best_seen = 0.0;    // seen accuracy at bias -inf
    double best_unseen = 0.0;  // unseen accuracy at bias +inf
    double state_acc = 0.0;
    double object_acc = 0.0;
    std::vector<CurvePoint> curve;  // bias-ascending operating points
};

/// score(i, (a,o)) = log_softmax(C_a(h_s))[a] + log_softmax(C_o(h_o))[o]
/// over the candidate pairs C_seen + C_unseen.
ScoreMatrix score_pairs(const ScenParams& params, const DatasetBundle& bundle, ImageSplit split);

/// Sweeps the calibration bias over every achievable operating point:
/// candidates are the per-image margins (best seen score minus best unseen
/// score), the midpoints between consecutive distinct margins, and the two
/// infinite sentinels. AUC integrates the upper envelope of the
/// (seen_acc, unseen_acc) points by trapezoid. state/object accuracies are
/// left at 0; evaluate() fills them.
EvalReport bias_sweep(const ScoreMatrix& sm);

/// Per-head argmax accuracies over the split, no bias involved.
std::pair<double, double> primitive_accuracies(const ScenParams& params,
                                               const DatasetBundle& bundle, ImageSplit split);

/// 2su/(s+u), zero when s+u is zero.
double harmonic_mean(double s, double u);

/// Full report: bias sweep plus the primitive accuracies.
EvalReport evaluate(const ScenParams& params, const DatasetBundle& bundle, ImageSplit split);

/// CSV "bias,seen_acc,unseen_acc" with -inf/inf sentinels.
void write_curve_csv(const std::filesystem::path& path, const EvalReport& report);

/// JSON object with the six report scalars.
void write_report_json(const std::filesystem::path& path, const EvalReport& report);

std::string format_metrics_row(const EvalReport& test_report, double val_auc);

}  // namespace scen
