#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "layoutforge/corpus.hpp"
#include "layoutforge/errors.hpp"
#include "layoutforge/labels.hpp"
#include "layoutforge/llm_client.hpp"
#include "layoutforge/promptcodec.hpp"
#include "layoutforge/rng.hpp"

namespace layoutforge {

struct FewShotSet {
    std::vector<ClassifiedString> examples;
    int k_per_class = 2;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;  // labels with fewer than k samples
};

// Uniform k examples per label without replacement, deterministic under seed.
// Labels with fewer than k training strings contribute everything they have.
inline FewShotSet select_fewshot(const std::vector<ClassifiedString>& train, int k,
                                 std::uint64_t seed) {
    if (train.empty()) throw EmptyCorpusError();
    if (k < 1) throw std::invalid_argument("k must be >= 1");

    FewShotSet set;
    set.k_per_class = k;
    set.seed = seed;

    std::array<std::vector<std::size_t>, kLabelCount> by_label;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (train[i].true_label == SectionLabel::Undefined) continue;
        by_label[label_index(train[i].true_label)].push_back(i);
    }

    std::mt19937_64 gen(seed);
    for (SectionLabel label : kAllLabels) {
        auto& indices = by_label[label_index(label)];
        if (indices.empty()) {
            set.warnings.push_back(std::string(label_name(label)) +
                                   " has no training strings");
            continue;
        }
        deterministic_shuffle(indices, gen);
        const std::size_t take = std::min<std::size_t>(indices.size(), k);
        if (take < static_cast<std::size_t>(k)) {
            set.warnings.push_back(std::string(label_name(label)) + " has only " +
                                   std::to_string(indices.size()) +
                                   " training strings, wanted " + std::to_string(k));
        }
        for (std::size_t t = 0; t < take; ++t) {
            set.examples.push_back(train[indices[t]]);
        }
    }
    return set;
}

// Chunks in input order; every batch has batch_size elements except possibly
// the last.
inline std::vector<std::vector<ClassifiedString>> batch_strings(
    const std::vector<ClassifiedString>& test, std::size_t batch_size = kMaxClassificationBatch) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    std::vector<std::vector<ClassifiedString>> batches;
    for (std::size_t start = 0; start < test.size(); start += batch_size) {
        const std::size_t end = std::min(test.size(), start + batch_size);
        batches.emplace_back(test.begin() + start, test.begin() + end);
    }
    return batches;
}

struct AnomalyReport {
    std::size_t missed = 0;     // index never answered
    std::size_t invalid = 0;    // answered with non-taxonomy text
    std::size_t duplicate = 0;  // answered more than once, first kept
    std::size_t failed_batches = 0;

    std::size_t total() const { return missed + invalid + duplicate; }
};

struct ClassificationRunResult {
    std::vector<ClassifiedString> predictions;  // input order
    AnomalyReport anomalies;
};

// One prompt per batch; answers align back to input order by index. A batch
// whose request fails leaves its strings Undefined with a transport anomaly
// rather than aborting the run.
inline ClassificationRunResult run_classification(const LlmConfig& config,
                                                  const FewShotSet& fewshot,
                                                  const std::vector<ClassifiedString>& test,
                                                  bool with_bbox,
                                                  std::size_t batch_size = kMaxClassificationBatch) {
    if (test.empty()) throw EmptyPredictionsError();

    const auto batches = batch_strings(test, batch_size);
    std::vector<std::string> prompts;
    prompts.reserve(batches.size());
    for (const auto& batch : batches) {
        prompts.push_back(build_classification_prompt(fewshot.examples, batch, with_bbox));
    }
    const auto responses = complete_batch(config, prompts);

    ClassificationRunResult result;
    result.predictions = test;
    std::size_t offset = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
        const std::size_t n = batches[b].size();
        if (!responses[b].ok) {
            result.anomalies.failed_batches++;
            for (std::size_t i = 0; i < n; ++i) {
                result.predictions[offset + i].predicted_label = SectionLabel::Undefined;
                result.predictions[offset + i].anomaly = "transport";
            }
            offset += n;
            continue;
        }
        const auto answer = parse_classification_answer(responses[b].text, n);
        for (std::size_t i = 0; i < n; ++i) {
            result.predictions[offset + i].predicted_label = answer.predictions[i];
            result.predictions[offset + i].anomaly.clear();
        }
        for (std::size_t missed_index : answer.missed) {
            result.predictions[offset + missed_index - 1].anomaly = "missed";
            result.anomalies.missed++;
        }
        for (std::size_t dup_index : answer.duplicated) {
            result.predictions[offset + dup_index - 1].anomaly = "duplicate";
            result.anomalies.duplicate++;
        }
        // Invalid lines degrade to Undefined; mark the strings whose final
        // prediction came out Undefined without a missed line.
        for (std::size_t i = 0; i < n; ++i) {
            auto& p = result.predictions[offset + i];
            if (p.predicted_label == SectionLabel::Undefined && p.anomaly.empty()) {
                p.anomaly = "invalid";
            }
        }
        result.anomalies.invalid += answer.invalid;
        offset += n;
    }
    return result;
}

struct LabelScore {
    SectionLabel label = SectionLabel::Undefined;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;  // true-label count
};

struct ClassificationMetrics {
    double accuracy = 0.0;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    std::vector<LabelScore> per_label;  // labels with support, taxonomy order
    AnomalyReport anomalies;
    std::size_t total = 0;
};

// Support-weighted precision/recall/F1 over true labels. Undefined
// predictions stay in as guaranteed errors; dropping them would hide exactly
// the failure mode the anomaly counts exist to surface.
inline ClassificationMetrics score(const std::vector<ClassifiedString>& predictions) {
    if (predictions.empty()) throw EmptyPredictionsError();

    constexpr std::size_t kClasses = kLabelCount + 1;  // Undefined sits last
    std::array<std::size_t, kClasses> tp{};
    std::array<std::size_t, kClasses> fp{};
    std::array<std::size_t, kClasses> support{};
    std::size_t correct = 0;

    ClassificationMetrics metrics;
    metrics.total = predictions.size();
    for (const auto& p : predictions) {
        if (!p.predicted_label) {
            throw std::invalid_argument("prediction for '" + p.text +
                                        "' has not been scored");
        }
        const std::size_t t = label_index(p.true_label);
        const std::size_t q = label_index(*p.predicted_label);
        support[t]++;
        if (t == q) {
            tp[t]++;
            ++correct;
        } else {
            fp[q]++;
        }
        if (p.anomaly == "missed") metrics.anomalies.missed++;
        if (p.anomaly == "invalid") metrics.anomalies.invalid++;
        if (p.anomaly == "duplicate") metrics.anomalies.duplicate++;
        if (p.anomaly == "transport") metrics.anomalies.failed_batches++;
    }

    metrics.accuracy = static_cast<double>(correct) / predictions.size();
    double weighted_p = 0.0, weighted_r = 0.0, weighted_f = 0.0;
    for (std::size_t c = 0; c < kClasses; ++c) {
        if (support[c] == 0) continue;
        const std::size_t predicted = tp[c] + fp[c];
        const double precision =
            predicted == 0 ? 0.0 : static_cast<double>(tp[c]) / predicted;
        const double recall = static_cast<double>(tp[c]) / support[c];
        const double f1 = (precision + recall) == 0.0
                              ? 0.0
                              : 2.0 * precision * recall / (precision + recall);
        weighted_p += support[c] * precision;
        weighted_r += support[c] * recall;
        weighted_f += support[c] * f1;

        LabelScore row;
        row.label = c < kLabelCount ? kAllLabels[c] : SectionLabel::Undefined;
        row.precision = precision;
        row.recall = recall;
        row.f1 = f1;
        row.support = support[c];
        metrics.per_label.push_back(row);
    }
    metrics.weighted_precision = weighted_p / predictions.size();
    metrics.weighted_recall = weighted_r / predictions.size();
    metrics.weighted_f1 = weighted_f / predictions.size();
    return metrics;
}

struct MetricStat {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for a single run
};

struct AggregateMetrics {
    MetricStat accuracy;
    MetricStat weighted_precision;
    MetricStat weighted_recall;
    MetricStat weighted_f1;
    std::size_t repetitions = 0;
    std::vector<ClassificationMetrics> runs;
};

// Repeats a full classification run and reports mean and sample standard
// deviation per headline metric, mirroring report conventions like
// "accuracy 47% with a standard deviation of 0.58%".
inline AggregateMetrics repeat_and_aggregate(
    const std::function<ClassificationMetrics()>& run_fn, int repetitions = 3) {
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");

    AggregateMetrics agg;
    agg.repetitions = repetitions;
    for (int r = 0; r < repetitions; ++r) agg.runs.push_back(run_fn());

    auto stat = [&](auto pick) {
        MetricStat s;
        for (const auto& m : agg.runs) s.mean += pick(m);
        s.mean /= agg.runs.size();
        if (agg.runs.size() > 1) {
            double ss = 0.0;
            for (const auto& m : agg.runs) {
                const double d = pick(m) - s.mean;
                ss += d * d;
            }
            s.stddev = std::sqrt(ss / (agg.runs.size() - 1));
        }
        return s;
    };
    agg.accuracy = stat([](const ClassificationMetrics& m) { return m.accuracy; });
    agg.weighted_precision =
        stat([](const ClassificationMetrics& m) { return m.weighted_precision; });
    agg.weighted_recall =
        stat([](const ClassificationMetrics& m) { return m.weighted_recall; });
    agg.weighted_f1 =
        stat([](const ClassificationMetrics& m) { return m.weighted_f1; });
    return agg;
}

}  // namespace layoutforge
