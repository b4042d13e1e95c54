#include "scen/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "scen/errors.hpp"

namespace scen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::size_t argmax_row(const double* row, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

}  // namespace

ScoreMatrix score_pairs(const ScenParams& params, const DatasetBundle& bundle, ImageSplit split) {
    if (params.dims.n_states != bundle.n_states() ||
        params.dims.n_objects != bundle.n_objects()) {
        throw ValidationError("score_pairs: model heads cover " +
                              std::to_string(params.dims.n_states) + "x" +
                              std::to_string(params.dims.n_objects) +
                              " primitives but the bundle has " +
                              std::to_string(bundle.n_states()) + "x" +
                              std::to_string(bundle.n_objects()));
    }
    const auto indices = bundle.split_indices(split);
    if (indices.empty()) {
        throw ValidationError(std::string("score_pairs: split '") + split_name(split) +
                              "' is empty");
    }

    ScoreMatrix sm;
    sm.candidate_pairs = bundle.seen_pairs;
    sm.candidate_pairs.insert(sm.candidate_pairs.end(), bundle.unseen_pairs.begin(),
                              bundle.unseen_pairs.end());
    std::sort(sm.candidate_pairs.begin(), sm.candidate_pairs.end());
    sm.is_unseen_pair.reserve(sm.candidate_pairs.size());
    for (const auto& pair : sm.candidate_pairs)
        sm.is_unseen_pair.push_back(bundle.is_unseen(pair) ? 1 : 0);

    auto x = constant(gather_features(bundle, indices));
    Prototypes protos = encode_rows(params, x);
    NodePtr state_lp = log_softmax(params.c_a.forward(protos.h_s), 1);
    NodePtr object_lp = log_softmax(params.c_o.forward(protos.h_o), 1);

    const std::size_t n = indices.size();
    const std::size_t n_pairs = sm.candidate_pairs.size();
    sm.scores = Tensor({n, n_pairs});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < n_pairs; ++p) {
            const CompositionLabel& pair = sm.candidate_pairs[p];
            sm.scores.at(i, p) =
                state_lp->value.at(i, static_cast<std::size_t>(pair.state)) +
                object_lp->value.at(i, static_cast<std::size_t>(pair.object));
        }
        const CompositionLabel& truth = bundle.labels[indices[i]];
        if (!std::binary_search(sm.candidate_pairs.begin(), sm.candidate_pairs.end(), truth)) {
            throw ValidationError("score_pairs: truth pair of image " +
                                  std::to_string(indices[i]) + " is not a candidate pair");
        }
        sm.truth.push_back(truth);
    }
    return sm;
}

EvalReport bias_sweep(const ScoreMatrix& sm) {
    const std::size_t n = sm.truth.size();
    const std::size_t n_pairs = sm.candidate_pairs.size();
    if (n == 0 || n_pairs == 0) throw ValidationError("bias_sweep: empty score matrix");

    bool any_seen_col = false, any_unseen_col = false;
    for (char u : sm.is_unseen_pair) (u ? any_unseen_col : any_seen_col) = true;
    if (!any_seen_col || !any_unseen_col) {
        throw ValidationError("bias_sweep: candidate pairs must include both seen and unseen "
                              "columns");
    }

    // Per image: best seen column, best unseen column (lowest index on
    // ties), the margin between them, and correctness under each regime.
    struct Row {
        double margin;
        bool seen_truth;
        bool correct_seen;    // prediction when margin > bias
        bool correct_tie;     // prediction when margin == bias
        bool correct_unseen;  // prediction when margin < bias
    };
    std::vector<Row> rows(n);
    std::size_t n_seen_truth = 0, n_unseen_truth = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* score = sm.scores.data() + i * n_pairs;
        std::size_t s_col = n_pairs, u_col = n_pairs;
        for (std::size_t p = 0; p < n_pairs; ++p) {
            if (sm.is_unseen_pair[p]) {
                if (u_col == n_pairs || score[p] > score[u_col]) u_col = p;
            } else {
                if (s_col == n_pairs || score[p] > score[s_col]) s_col = p;
            }
        }
        const auto truth_it = std::lower_bound(sm.candidate_pairs.begin(),
                                               sm.candidate_pairs.end(), sm.truth[i]);
        if (truth_it == sm.candidate_pairs.end() || *truth_it != sm.truth[i]) {
            throw ValidationError("bias_sweep: truth of row " + std::to_string(i) +
                                  " is not a candidate pair");
        }
        const auto truth_col = static_cast<std::size_t>(truth_it - sm.candidate_pairs.begin());
        Row& row = rows[i];
        row.margin = score[s_col] - score[u_col];
        row.seen_truth = !sm.is_unseen_pair[truth_col];
        row.correct_seen = s_col == truth_col;
        row.correct_unseen = u_col == truth_col;
        row.correct_tie = std::min(s_col, u_col) == truth_col;
        (row.seen_truth ? n_seen_truth : n_unseen_truth) += 1;
    }
    if (n_seen_truth == 0) {
        throw ValidationError("bias_sweep: no image with a seen-pair truth label");
    }
    if (n_unseen_truth == 0) {
        throw ValidationError("bias_sweep: no image with an unseen-pair truth label");
    }

    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return a.margin < b.margin; });
    std::vector<double> margins(n);
    for (std::size_t i = 0; i < n; ++i) margins[i] = rows[i].margin;

    // prefix[i] = correct count among the first i sorted rows, per regime and truth side
    auto prefix = [&](bool seen_side, bool Row::*field) {
        std::vector<std::size_t> acc(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i)
            acc[i + 1] = acc[i] + ((rows[i].seen_truth == seen_side && rows[i].*field) ? 1 : 0);
        return acc;
    };
    const auto cs_seen = prefix(true, &Row::correct_seen);
    const auto ct_seen = prefix(true, &Row::correct_tie);
    const auto cu_seen = prefix(true, &Row::correct_unseen);
    const auto cs_unseen = prefix(false, &Row::correct_seen);
    const auto ct_unseen = prefix(false, &Row::correct_tie);
    const auto cu_unseen = prefix(false, &Row::correct_unseen);

    std::vector<double> candidates;
    candidates.push_back(-kInf);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && margins[i] == margins[i - 1]) continue;
        if (!candidates.empty() && std::isfinite(candidates.back())) {
            const double mid = candidates.back() + (margins[i] - candidates.back()) / 2.0;
            if (mid != candidates.back() && mid != margins[i]) candidates.push_back(mid);
        }
        candidates.push_back(margins[i]);
    }
    candidates.push_back(kInf);

    EvalReport report;
    report.curve.reserve(candidates.size());
    for (double b : candidates) {
        // rows below lo: margin < b (unseen side); [lo, hi): == b (tie); from hi: > b (seen side)
        const std::size_t lo = static_cast<std::size_t>(
            std::lower_bound(margins.begin(), margins.end(), b) - margins.begin());
        const std::size_t hi = static_cast<std::size_t>(
            std::upper_bound(margins.begin(), margins.end(), b) - margins.begin());
        const std::size_t seen_correct =
            (cs_seen[n] - cs_seen[hi]) + (ct_seen[hi] - ct_seen[lo]) + cu_seen[lo];
        const std::size_t unseen_correct =
            (cs_unseen[n] - cs_unseen[hi]) + (ct_unseen[hi] - ct_unseen[lo]) + cu_unseen[lo];
        CurvePoint point;
        point.bias = b;
        point.seen_acc = static_cast<double>(seen_correct) / static_cast<double>(n_seen_truth);
        point.unseen_acc =
            static_cast<double>(unseen_correct) / static_cast<double>(n_unseen_truth);
        if (!report.curve.empty()) {
            const CurvePoint& prev = report.curve.back();
            if (point.seen_acc > prev.seen_acc || point.unseen_acc < prev.unseen_acc) {
                throw NumericError("bias_sweep: curve is not monotone in the bias");
            }
        }
        report.curve.push_back(point);
    }

    report.best_seen = report.curve.front().seen_acc;
    report.best_unseen = report.curve.back().unseen_acc;
    for (const CurvePoint& point : report.curve)
        report.best_hm = std::max(report.best_hm, harmonic_mean(point.seen_acc, point.unseen_acc));

    // AUC: trapezoid over the upper envelope (max unseen_acc per distinct seen_acc)
    std::vector<std::pair<double, double>> pts;
    pts.reserve(report.curve.size());
    for (const CurvePoint& point : report.curve) pts.emplace_back(point.seen_acc, point.unseen_acc);
    std::sort(pts.begin(), pts.end());
    std::vector<std::pair<double, double>> envelope;
    for (const auto& pt : pts) {
        if (!envelope.empty() && envelope.back().first == pt.first) {
            envelope.back().second = pt.second;  // sorted, so this is the max
        } else {
            envelope.push_back(pt);
        }
    }
    for (std::size_t i = 1; i < envelope.size(); ++i) {
        report.auc += (envelope[i].first - envelope[i - 1].first) *
                      (envelope[i].second + envelope[i - 1].second) / 2.0;
    }
    return report;
}

std::pair<double, double> primitive_accuracies(const ScenParams& params,
                                               const DatasetBundle& bundle, ImageSplit split) {
    const auto indices = bundle.split_indices(split);
    if (indices.empty()) {
        throw ValidationError(std::string("primitive_accuracies: split '") + split_name(split) +
                              "' is empty");
    }
    auto x = constant(gather_features(bundle, indices));
    Prototypes protos = encode_rows(params, x);
    NodePtr state_head = params.c_a.forward(protos.h_s);
    NodePtr object_head = params.c_o.forward(protos.h_o);
    const Tensor& state_logits = state_head->value;
    const Tensor& object_logits = object_head->value;
    std::size_t state_hits = 0, object_hits = 0;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const CompositionLabel& truth = bundle.labels[indices[i]];
        if (argmax_row(state_logits.data() + i * state_logits.cols(), state_logits.cols()) ==
            static_cast<std::size_t>(truth.state)) {
            ++state_hits;
        }
        if (argmax_row(object_logits.data() + i * object_logits.cols(), object_logits.cols()) ==
            static_cast<std::size_t>(truth.object)) {
            ++object_hits;
        }
    }
    const auto total = static_cast<double>(indices.size());
    return {static_cast<double>(state_hits) / total, static_cast<double>(object_hits) / total};
}

double harmonic_mean(double s, double u) {
    if (s + u == 0.0) return 0.0;
    return 2.0 * s * u / (s + u);
}

EvalReport evaluate(const ScenParams& params, const DatasetBundle& bundle, ImageSplit split) {
    EvalReport report = bias_sweep(score_pairs(params, bundle, split));
    auto [state_acc, object_acc] = primitive_accuracies(params, bundle, split);
    report.state_acc = state_acc;
    report.object_acc = object_acc;
    return report;
}

void write_curve_csv(const std::filesystem::path& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
    out << "bias,seen_acc,unseen_acc\n";
    for (const CurvePoint& point : report.curve) {
        out << fmt_double(point.bias) << "," << fmt_double(point.seen_acc) << ","
            << fmt_double(point.unseen_acc) << "\n";
    }
    if (!out.good()) throw ValidationError("write failed on " + path.string());
}

void write_report_json(const std::filesystem::path& path, const EvalReport& report) {
    nlohmann::ordered_json j;
    j["auc"] = report.auc;
    j["best_hm"] = report.best_hm;
    j["best_seen"] = report.best_seen;
    j["best_unseen"] = report.best_unseen;
    j["state_acc"] = report.state_acc;
    j["object_acc"] = report.object_acc;
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
    if (!out.good()) throw ValidationError("write failed on " + path.string());
}

std::string format_metrics_row(const EvalReport& test_report, double val_auc) {
    char buf[160];
    char val[16];
    if (std::isnan(val_auc)) {
        std::snprintf(val, sizeof(val), "%5s", "-");
    } else {
        std::snprintf(val, sizeof(val), "%5.1f", 100.0 * val_auc);
    }
    std::snprintf(buf, sizeof(buf), "%s %5.1f %5.1f %5.1f %5.1f %5.1f %5.1f", val,
                  100.0 * test_report.auc, 100.0 * test_report.best_hm,
                  100.0 * test_report.best_seen, 100.0 * test_report.best_unseen,
                  100.0 * test_report.state_acc, 100.0 * test_report.object_acc);
    return buf;
}

}  // namespace scen
