#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fundus {

struct ScoredSample {
    double score = 0.0;
    int label = 0;
    std::string id;
};

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

// Mann-Whitney U with midranks: (sum of positive ranks - P(P+1)/2) / (P*N).
// Throws MetricError unless both classes are present.
double auroc(std::span<const ScoredSample> samples);

// (fpr, tpr) after each block of tied scores, descending; starts at (0,0), ends at (1,1).
std::vector<CurvePoint> roc_curve(std::span<const ScoredSample> samples);

// Trapezoidal area under a polyline.
double trapezoid_area(std::span<const CurvePoint> curve);

// Average precision: sum over descending tie blocks of delta-recall * precision.
// Throws MetricError when there are no positives.
double auprc(std::span<const ScoredSample> samples);

// (recall, precision) at each tie-block cut, descending score.
std::vector<CurvePoint> pr_curve(std::span<const ScoredSample> samples);

struct Confusion {
    double sensitivity = 0.0;
    double specificity = 0.0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// Positive iff score >= threshold.
Confusion confusion_at(std::span<const ScoredSample> samples, double threshold);

struct MetricsReport {
    double auroc = 0.0;
    double auprc = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double threshold = 0.5;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    std::vector<CurvePoint> roc;
    std::vector<CurvePoint> pr;
};

MetricsReport report(std::span<const ScoredSample> samples, double threshold);

// JSON text of the report (stable key order, compact curves).
std::string report_json(const MetricsReport& r);

// "id,score,label" with scores printed round-trip exact.
std::string scores_csv(std::span<const ScoredSample> samples);

}  // namespace fundus
