#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "layoutforge/errors.hpp"
#include "layoutforge/generation.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/labels.hpp"
#include "layoutforge/promptcodec.hpp"

namespace layoutforge {

using Cov2 = std::array<std::array<double, 2>, 2>;

// A 2-D point cloud summarized for distance queries. The ridge keeps the
// covariance invertible for near-collinear clusters from small corpora.
struct ClusterStats {
    Point centroid{};
    Cov2 covariance{};  // sample covariance (n-1) plus ridge
    std::size_t count = 0;
    bool low_sample = false;  // fewer than 3 points
};

namespace detail {

inline Cov2 raw_covariance(const std::vector<Point>& points, const Point& mean) {
    Cov2 cov{};
    if (points.size() < 2) return cov;
    for (const auto& p : points) {
        const double dx = p.x - mean.x;
        const double dy = p.y - mean.y;
        cov[0][0] += dx * dx;
        cov[0][1] += dx * dy;
        cov[1][1] += dy * dy;
    }
    const double denom = static_cast<double>(points.size() - 1);
    cov[0][0] /= denom;
    cov[0][1] /= denom;
    cov[1][1] /= denom;
    cov[1][0] = cov[0][1];
    return cov;
}

inline void add_ridge(Cov2& cov) {
    const double ridge = 1e-9 * std::max(cov[0][0] + cov[1][1], 1.0);
    cov[0][0] += ridge;
    cov[1][1] += ridge;
}

}  // namespace detail

inline ClusterStats cluster_stats(const std::vector<Point>& points) {
    if (points.empty()) throw EmptyClusterError();
    ClusterStats stats;
    stats.count = points.size();
    stats.low_sample = points.size() < 3;
    for (const auto& p : points) {
        stats.centroid.x += p.x;
        stats.centroid.y += p.y;
    }
    stats.centroid.x /= points.size();
    stats.centroid.y /= points.size();
    stats.covariance = detail::raw_covariance(points, stats.centroid);
    detail::add_ridge(stats.covariance);
    return stats;
}

// sqrt((x-mu)^T Sigma^-1 (x-mu)) via the closed-form 2x2 inverse. A singular
// post-ridge covariance degrades to plain Euclidean distance and reports it
// through the flag instead of failing the whole evaluation.
inline double mahalanobis(const Point& x, const ClusterStats& stats,
                          bool* euclidean_fallback = nullptr) {
    const double dx = x.x - stats.centroid.x;
    const double dy = x.y - stats.centroid.y;
    const auto& c = stats.covariance;
    const double det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    if (!(det > 0.0) || !std::isfinite(det)) {
        if (euclidean_fallback) *euclidean_fallback = true;
        return std::sqrt(dx * dx + dy * dy);
    }
    const double q = (c[1][1] * dx * dx - 2.0 * c[0][1] * dx * dy +
                      c[0][0] * dy * dy) /
                     det;
    return std::sqrt(std::max(q, 0.0));
}

inline std::array<std::size_t, kLabelCount> intra_label_overlaps(const GenerationRun& run) {
    std::array<std::size_t, kLabelCount> counts{};
    for (const auto& sample : run.samples) {
        if (sample.failed) continue;
        const auto& entries = sample.layout.entries;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            for (std::size_t j = i + 1; j < entries.size(); ++j) {
                if (entries[i].label != entries[j].label) continue;
                if (entries[i].label == SectionLabel::Undefined) continue;
                if (overlaps(entries[i].bbox, entries[j].bbox)) {
                    counts[label_index(entries[i].label)]++;
                }
            }
        }
    }
    return counts;
}

struct LabelEvalRow {
    SectionLabel label = SectionLabel::Undefined;
    std::size_t gt_instances = 0;
    std::size_t gen_instances = 0;
    double gt_box_area = std::numeric_limits<double>::quiet_NaN();
    double mah_origin = std::numeric_limits<double>::quiet_NaN();
    double mah_closing = std::numeric_limits<double>::quiet_NaN();
    double area_diff = std::numeric_limits<double>::quiet_NaN();
    std::size_t overlap_count = 0;
    bool no_ground_truth = false;  // generated label never seen in GT
    bool not_generated = false;    // GT label never generated
    bool euclidean_fallback = false;
    bool low_sample = false;  // GT cluster has fewer than 3 points
};

struct LayoutEvalReport {
    std::vector<LabelEvalRow> rows;  // stable report label order
    std::size_t gt_layouts = 0;
    std::size_t generated_ok = 0;
    std::size_t generated_failed = 0;
    bool pooled_covariance = false;
    std::vector<std::string> notes;
};

// Compares generated layouts to ground truth per label: Mahalanobis distance
// between origin centroids and between closing centroids, signed mean-area
// difference (generated minus ground truth), and intra-label overlap counts.
// The distance metric uses the ground-truth cluster's covariance by default;
// pooled covariance blends both sides' spread when requested.
inline LayoutEvalReport evaluate_layouts(const GenerationRun& generated,
                                         const std::vector<LayoutSample>& ground_truth,
                                         bool pooled_covariance = false) {
    if (ground_truth.empty()) throw EmptyCorpusError();

    struct Side {
        std::vector<Point> origins;
        std::vector<Point> closings;
        double area_sum = 0.0;
        std::size_t n = 0;
    };
    std::array<Side, kLabelCount> gt{};
    std::array<Side, kLabelCount> gen{};

    auto accumulate = [](std::array<Side, kLabelCount>& side, const LayoutSample& sample) {
        for (const auto& e : sample.entries) {
            if (e.label == SectionLabel::Undefined) continue;
            auto& s = side[label_index(e.label)];
            s.origins.push_back(e.bbox.origin());
            s.closings.push_back(e.bbox.closing());
            s.area_sum += area(e.bbox);
            s.n++;
        }
    };
    for (const auto& sample : ground_truth) accumulate(gt, sample);
    std::size_t failed = 0;
    for (const auto& sample : generated.samples) {
        if (sample.failed) {
            ++failed;
            continue;
        }
        accumulate(gen, sample.layout);
    }

    const auto overlap_counts = intra_label_overlaps(generated);

    LayoutEvalReport report;
    report.gt_layouts = ground_truth.size();
    report.generated_ok = generated.samples.size() - failed;
    report.generated_failed = failed;
    report.pooled_covariance = pooled_covariance;
    if (failed > 0) {
        report.notes.push_back(std::to_string(failed) +
                               " failed generated sample(s) excluded");
    }

    auto distance = [&](const std::vector<Point>& gt_points,
                        const std::vector<Point>& gen_points,
                        bool* fallback) {
        ClusterStats gt_stats = cluster_stats(gt_points);
        ClusterStats gen_stats = cluster_stats(gen_points);
        if (pooled_covariance && gt_points.size() + gen_points.size() >= 3) {
            Cov2 pooled{};
            const Cov2 a = detail::raw_covariance(gt_points, gt_stats.centroid);
            const Cov2 b = detail::raw_covariance(gen_points, gen_stats.centroid);
            const double wa = static_cast<double>(gt_points.size()) - 1.0;
            const double wb = static_cast<double>(gen_points.size()) - 1.0;
            for (int r = 0; r < 2; ++r) {
                for (int c = 0; c < 2; ++c) {
                    pooled[r][c] = (wa * a[r][c] + wb * b[r][c]) / (wa + wb);
                }
            }
            detail::add_ridge(pooled);
            gt_stats.covariance = pooled;
        }
        return mahalanobis(gen_stats.centroid, gt_stats, fallback);
    };

    for (SectionLabel label : kReportLabelOrder) {
        const auto& g = gt[label_index(label)];
        const auto& h = gen[label_index(label)];
        if (g.n == 0 && h.n == 0) continue;

        LabelEvalRow row;
        row.label = label;
        row.gt_instances = g.n;
        row.gen_instances = h.n;
        row.overlap_count = overlap_counts[label_index(label)];
        if (g.n > 0) {
            row.gt_box_area = g.area_sum / g.n;
            row.low_sample = g.n < 3;
        } else {
            row.no_ground_truth = true;
            report.notes.push_back(std::string(label_name(label)) +
                                   " generated but absent from ground truth");
        }
        if (h.n == 0) {
            row.not_generated = true;
            report.notes.push_back(std::string(label_name(label)) +
                                   " present in ground truth but never generated");
        }
        if (g.n > 0 && h.n > 0) {
            bool fallback = false;
            row.mah_origin = distance(g.origins, h.origins, &fallback);
            row.mah_closing = distance(g.closings, h.closings, &fallback);
            row.euclidean_fallback = fallback;
            if (fallback) {
                report.notes.push_back(std::string(label_name(label)) +
                                       " used Euclidean fallback (singular covariance)");
            }
            row.area_diff = h.area_sum / h.n - g.area_sum / g.n;
        }
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace layoutforge
