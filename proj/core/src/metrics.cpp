#include "fundus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fundus/error.hpp"
#include "fundus/kv.hpp"

namespace fundus {

namespace {

struct Counts {
    std::size_t pos = 0, neg = 0;
};

Counts count(std::span<const ScoredSample> samples) {
    Counts c;
    for (const auto& s : samples) {
        if (s.label != 0 && s.label != 1) throw MetricError("labels", "label must be 0 or 1");
        if (!std::isfinite(s.score)) throw MetricError("scores", "score must be finite");
        (s.label ? c.pos : c.neg)++;
    }
    return c;
}

Counts require_both(std::span<const ScoredSample> samples, const char* metric) {
    const Counts c = count(samples);
    if (c.pos == 0) throw MetricError(metric, "no positive samples");
    if (c.neg == 0) throw MetricError(metric, "no negative samples");
    return c;
}

// Indices sorted by descending score; stable so the order is reproducible.
std::vector<std::size_t> descending(std::span<const ScoredSample> samples) {
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return samples[a].score > samples[b].score; });
    return idx;
}

// Calls fn(block_pos, block_neg) for each block of equal scores, highest first.
template <class Fn>
void for_each_block(std::span<const ScoredSample> samples, Fn fn) {
    const auto idx = descending(samples);
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t p = 0, n = 0, j = i;
        for (; j < idx.size() && samples[idx[j]].score == samples[idx[i]].score; ++j)
            (samples[idx[j]].label ? p : n)++;
        fn(p, n);
        i = j;
    }
}

}  // namespace

double auroc(std::span<const ScoredSample> samples) {
    const Counts c = require_both(samples, "auroc");
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return samples[a].score < samples[b].score; });

    // Ranks are 1-based; a tie block occupying positions i..j-1 gets midrank (i+1+j)/2.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        std::size_t block_pos = 0;
        while (j < idx.size() && samples[idx[j]].score == samples[idx[i]].score) block_pos += samples[idx[j++]].label;
        const double midrank = static_cast<double>(i + 1 + j) / 2.0;
        pos_rank_sum += midrank * static_cast<double>(block_pos);
        i = j;
    }
    const double np = static_cast<double>(c.pos), nn = static_cast<double>(c.neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<CurvePoint> roc_curve(std::span<const ScoredSample> samples) {
    const Counts c = require_both(samples, "roc_curve");
    std::vector<CurvePoint> pts{{0.0, 0.0}};
    std::size_t tp = 0, fp = 0;
    for_each_block(samples, [&](std::size_t p, std::size_t n) {
        tp += p;
        fp += n;
        pts.push_back({static_cast<double>(fp) / static_cast<double>(c.neg),
                       static_cast<double>(tp) / static_cast<double>(c.pos)});
    });
    return pts;
}

double trapezoid_area(std::span<const CurvePoint> curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += (curve[i].x - curve[i - 1].x) * (curve[i].y + curve[i - 1].y) / 2.0;
    return area;
}

double auprc(std::span<const ScoredSample> samples) {
    const Counts c = count(samples);
    if (c.pos == 0) throw MetricError("auprc", "no positive samples");
    double ap = 0.0;
    std::size_t tp = 0, fp = 0, prev_tp = 0;
    for_each_block(samples, [&](std::size_t p, std::size_t n) {
        tp += p;
        fp += n;
        if (tp != prev_tp) {
            const double d_recall = static_cast<double>(tp - prev_tp) / static_cast<double>(c.pos);
            const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
            ap += d_recall * precision;
        }
        prev_tp = tp;
    });
    return ap;
}

std::vector<CurvePoint> pr_curve(std::span<const ScoredSample> samples) {
    const Counts c = count(samples);
    if (c.pos == 0) throw MetricError("pr_curve", "no positive samples");
    std::vector<CurvePoint> pts;
    std::size_t tp = 0, fp = 0;
    for_each_block(samples, [&](std::size_t p, std::size_t n) {
        tp += p;
        fp += n;
        pts.push_back({static_cast<double>(tp) / static_cast<double>(c.pos),
                       static_cast<double>(tp) / static_cast<double>(tp + fp)});
    });
    return pts;
}

Confusion confusion_at(std::span<const ScoredSample> samples, double threshold) {
    count(samples);
    Confusion r;
    for (const auto& s : samples) {
        const bool predicted = s.score >= threshold;
        if (s.label) (predicted ? r.tp : r.fn)++;
        else (predicted ? r.fp : r.tn)++;
    }
    if (r.tp + r.fn == 0) throw MetricError("sensitivity", "no positive samples");
    if (r.tn + r.fp == 0) throw MetricError("specificity", "no negative samples");
    r.sensitivity = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
    r.specificity = static_cast<double>(r.tn) / static_cast<double>(r.tn + r.fp);
    return r;
}

MetricsReport report(std::span<const ScoredSample> samples, double threshold) {
    const Counts c = require_both(samples, "report");
    const Confusion conf = confusion_at(samples, threshold);
    MetricsReport r;
    r.auroc = auroc(samples);
    r.auprc = auprc(samples);
    r.sensitivity = conf.sensitivity;
    r.specificity = conf.specificity;
    r.threshold = threshold;
    r.n_pos = c.pos;
    r.n_neg = c.neg;
    r.roc = roc_curve(samples);
    r.pr = pr_curve(samples);
    return r;
}

std::string report_json(const MetricsReport& r) {
    using nlohmann::ordered_json;
    auto curve = [](const std::vector<CurvePoint>& pts) {
        ordered_json arr = ordered_json::array();
        for (const auto& p : pts) arr.push_back({p.x, p.y});
        return arr;
    };
    ordered_json j;
    j["auroc"] = r.auroc;
    j["auprc"] = r.auprc;
    j["sensitivity"] = r.sensitivity;
    j["specificity"] = r.specificity;
    j["threshold"] = r.threshold;
    j["n_pos"] = r.n_pos;
    j["n_neg"] = r.n_neg;
    j["auprc_estimator"] = "average_precision";
    j["roc"] = curve(r.roc);
    j["pr"] = curve(r.pr);
    return j.dump(2) + "\n";
}

std::string scores_csv(std::span<const ScoredSample> samples) {
    std::string out = "id,score,label\n";
    for (const auto& s : samples) {
        if (s.id.find_first_of(",\"\n") != std::string::npos) {
            out += '"';
            for (char ch : s.id) {
                if (ch == '"') out += '"';
                out += ch;
            }
            out += '"';
        } else {
            out += s.id;
        }
        out += ',';
        out += format_double(s.score);
        out += ',';
        out += std::to_string(s.label);
        out += '\n';
    }
    return out;
}

}  // namespace fundus
