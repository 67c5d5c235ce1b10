#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "layoutforge/corpus.hpp"
#include "layoutforge/errors.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/labels.hpp"
#include "layoutforge/llm_client.hpp"
#include "layoutforge/promptcodec.hpp"
#include "layoutforge/rng.hpp"

namespace layoutforge {

struct GeneratedSample {
    std::vector<SectionLabel> labels;  // requested multiset for this sample
    LayoutSample layout;               // empty entries when failed
    bool failed = false;
    std::string error;  // last failure reason, diagnostic only
};

struct GenerationRun {
    std::string generator;  // "llm", "baseline", or a caller-chosen tag
    std::vector<GeneratedSample> samples;

    std::size_t ok_count() const {
        std::size_t n = 0;
        for (const auto& s : samples) n += s.failed ? 0 : 1;
        return n;
    }
    std::size_t failed_count() const { return samples.size() - ok_count(); }
};

// ---------------------------------------------------------------------------
// Statistical baseline generator
// ---------------------------------------------------------------------------

namespace detail {

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<std::array<double, 4>, 4>;

// Cholesky factor tolerant of positive-semidefinite input: directions with no
// variance get a zero column instead of failing, so identical training boxes
// reproduce themselves exactly.
inline Mat4 cholesky_psd(const Mat4& a) {
    Mat4 l{};
    for (int j = 0; j < 4; ++j) {
        double d = a[j][j];
        for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
        if (d <= 1e-300) {
            l[j][j] = 0.0;
            continue;
        }
        l[j][j] = std::sqrt(d);
        for (int i = j + 1; i < 4; ++i) {
            double s = a[i][j];
            for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            l[i][j] = s / l[j][j];
        }
    }
    return l;
}

}  // namespace detail

// Per-label joint Gaussian over (x1, y1, x2, y2). The joint form keeps corner
// correlation, so sampled boxes have coherent sizes instead of independently
// scattered corners.
struct LabelGaussian {
    detail::Vec4 mean{};
    detail::Mat4 covariance{};  // sample covariance plus ridge
    detail::Mat4 chol{};
    std::size_t count = 0;
    bool degenerate = true;  // fewer than 2 training boxes: sample the mean
};

struct BaselineModel {
    std::array<LabelGaussian, kLabelCount> labels{};
    detail::Vec4 global_mean{};  // over every section, fallback for unseen labels
    std::size_t total_boxes = 0;
};

inline BaselineModel fit_baseline(const DocumentSet& train) {
    if (train.empty()) throw EmptyCorpusError();

    std::array<std::vector<detail::Vec4>, kLabelCount> boxes;
    detail::Vec4 global_sum{};
    std::size_t global_n = 0;
    for (const auto& doc : train.docs) {
        for (const auto& s : doc.sections) {
            detail::Vec4 v{s.bbox.x1, s.bbox.y1, s.bbox.x2, s.bbox.y2};
            boxes[label_index(s.label)].push_back(v);
            for (int k = 0; k < 4; ++k) global_sum[k] += v[k];
            ++global_n;
        }
    }
    if (global_n == 0) throw EmptyCorpusError();

    BaselineModel model;
    model.total_boxes = global_n;
    for (int k = 0; k < 4; ++k) model.global_mean[k] = global_sum[k] / global_n;

    for (std::size_t li = 0; li < kLabelCount; ++li) {
        auto& g = model.labels[li];
        const auto& vs = boxes[li];
        g.count = vs.size();
        if (vs.empty()) {
            g.mean = model.global_mean;
            continue;
        }
        for (const auto& v : vs) {
            for (int k = 0; k < 4; ++k) g.mean[k] += v[k];
        }
        for (int k = 0; k < 4; ++k) g.mean[k] /= vs.size();
        if (vs.size() < 2) continue;

        g.degenerate = false;
        for (const auto& v : vs) {
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) {
                    g.covariance[r][c] +=
                        (v[r] - g.mean[r]) * (v[c] - g.mean[c]);
                }
            }
        }
        double trace = 0.0;
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) g.covariance[r][c] /= (vs.size() - 1);
            trace += g.covariance[r][r];
        }
        double ridge = 1e-6 * trace / 4.0;
        for (int r = 0; r < 4; ++r) g.covariance[r][r] += ridge;
        g.chol = detail::cholesky_psd(g.covariance);
    }
    return model;
}

// Draws each requested label from its fitted Gaussian. Draws with inverted
// corners are redrawn up to 20 times; the final draw is corner-swapped and
// clamped with repair flags. Deterministic under seed.
inline GenerationRun sample_baseline(const BaselineModel& model,
                                     const std::vector<SectionLabel>& labels,
                                     std::size_t n_samples, std::uint64_t seed) {
    if (labels.empty()) throw EmptyLabelsError();
    for (SectionLabel l : labels) {
        if (l == SectionLabel::Undefined) {
            throw std::invalid_argument("Undefined cannot be sampled");
        }
    }

    std::mt19937_64 gen(seed);
    GenerationRun run;
    run.generator = "baseline";
    run.samples.reserve(n_samples);

    for (std::size_t s = 0; s < n_samples; ++s) {
        GeneratedSample sample;
        sample.labels = labels;
        sample.layout.provenance = Provenance::Baseline;
        for (SectionLabel label : labels) {
            const auto& g = model.labels[label_index(label)];
            detail::Vec4 v = g.mean;
            if (!g.degenerate) {
                for (int attempt = 0; attempt < 20; ++attempt) {
                    std::array<double, 4> z;
                    for (double& zk : z) zk = standard_normal(gen);
                    for (int r = 0; r < 4; ++r) {
                        v[r] = g.mean[r];
                        for (int c = 0; c <= r; ++c) v[r] += g.chol[r][c] * z[c];
                    }
                    if (v[0] <= v[2] && v[1] <= v[3]) break;
                }
            }
            LayoutEntry entry;
            entry.label = label;
            entry.bbox = sanitize_bbox(v[0], v[1], v[2], v[3], &entry.repairs);
            sample.layout.entries.push_back(entry);
        }
        run.samples.push_back(std::move(sample));
    }
    return run;
}

// ---------------------------------------------------------------------------
// LLM generation
// ---------------------------------------------------------------------------

// Asks the model for n_samples layouts conditioned on the same label list.
// A sample whose answer fails to parse is re-asked up to `retries` times
// (after its first attempt) and then recorded as failed, never dropped.
// Requests within a wave run through complete_batch's bounded parallelism.
inline GenerationRun generate_llm(const LlmConfig& config,
                                  const std::vector<SectionLabel>& labels,
                                  std::size_t n_samples, int retries = 3) {
    if (n_samples == 0) throw std::invalid_argument("n_samples must be >= 1");
    const std::string prompt = build_generation_prompt(labels);

    GenerationRun run;
    run.generator = "llm";
    run.samples.resize(n_samples);
    for (auto& s : run.samples) {
        s.labels = labels;
        s.failed = true;
        s.error = "not attempted";
    }

    std::vector<std::size_t> pending(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) pending[i] = i;

    for (int wave = 0; wave <= retries && !pending.empty(); ++wave) {
        std::vector<std::string> prompts(pending.size(), prompt);
        auto results = complete_batch(config, prompts);
        std::vector<std::size_t> still_pending;
        for (std::size_t k = 0; k < pending.size(); ++k) {
            auto& sample = run.samples[pending[k]];
            const auto& res = results[k];
            if (!res.ok) {
                sample.error = res.error;
                still_pending.push_back(pending[k]);
                continue;
            }
            try {
                sample.layout = parse_generation_answer(res.text, labels);
                sample.failed = false;
                sample.error.clear();
            } catch (const AnswerParseError& e) {
                sample.error = e.what();
                still_pending.push_back(pending[k]);
            }
        }
        pending = std::move(still_pending);
    }
    return run;
}

// ---------------------------------------------------------------------------
// Validation and persistence
// ---------------------------------------------------------------------------

struct LayoutIssue {
    enum class Kind { OutOfRange, InvertedCorners, ZeroArea, IntraLabelOverlap };
    Kind kind;
    std::size_t entry = 0;
    std::size_t other_entry = 0;  // second index for overlap issues
    std::string message;
};

inline std::vector<LayoutIssue> validate_layout(const LayoutSample& sample) {
    std::vector<LayoutIssue> issues;
    for (std::size_t i = 0; i < sample.entries.size(); ++i) {
        const auto& e = sample.entries[i];
        const auto& b = e.bbox;
        if (b.x1 < 0 || b.y1 < 0 || b.x2 > 100 || b.y2 > 100) {
            issues.push_back({LayoutIssue::Kind::OutOfRange, i, i,
                              std::string(label_name(e.label)) +
                                  " coordinates outside [0, 100]"});
        }
        if (b.x1 > b.x2 || b.y1 > b.y2) {
            issues.push_back({LayoutIssue::Kind::InvertedCorners, i, i,
                              std::string(label_name(e.label)) +
                                  " has inverted corners"});
        } else if (area(b) == 0.0) {
            issues.push_back({LayoutIssue::Kind::ZeroArea, i, i,
                              std::string(label_name(e.label)) +
                                  " has zero area"});
        }
    }
    for (std::size_t i = 0; i < sample.entries.size(); ++i) {
        for (std::size_t j = i + 1; j < sample.entries.size(); ++j) {
            if (sample.entries[i].label != sample.entries[j].label) continue;
            if (overlaps(sample.entries[i].bbox, sample.entries[j].bbox)) {
                issues.push_back({LayoutIssue::Kind::IntraLabelOverlap, i, j,
                                  std::string("two ") +
                                      label_name(sample.entries[i].label) +
                                      " boxes overlap"});
            }
        }
    }
    return issues;
}

namespace detail {

inline std::vector<std::string> repair_notes(const GeneratedSample& sample) {
    std::vector<std::string> notes = sample.layout.notes;
    for (const auto& e : sample.layout.entries) {
        if (e.repairs == kRepairNone) continue;
        std::string note = label_name(e.label);
        note += ':';
        if (e.repairs & kRepairSwappedX) note += " swapped_x";
        if (e.repairs & kRepairSwappedY) note += " swapped_y";
        if (e.repairs & kRepairClamped) note += " clamped";
        notes.push_back(note);
    }
    return notes;
}

}  // namespace detail

inline void save_baseline(const BaselineModel& model, const std::string& path) {
    nlohmann::ordered_json j;
    j["labels"] = nlohmann::ordered_json::object();
    for (SectionLabel label : kAllLabels) {
        const auto& g = model.labels[label_index(label)];
        nlohmann::ordered_json jg;
        jg["mean"] = g.mean;
        jg["covariance"] = g.covariance;
        jg["count"] = g.count;
        jg["degenerate"] = g.degenerate;
        j["labels"][label_name(label)] = std::move(jg);
    }
    j["global_mean"] = model.global_mean;
    j["total_boxes"] = model.total_boxes;
    std::ofstream out(path);
    if (!out) throw Error("cannot write baseline model: " + path);
    out << j.dump(2) << '\n';
}

inline BaselineModel load_baseline(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read baseline model: " + path);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("labels")) {
        throw ParseError("baseline model file is not a model object");
    }
    BaselineModel model;
    try {
        for (SectionLabel label : kAllLabels) {
            const auto& jg = j["labels"].at(label_name(label));
            auto& g = model.labels[label_index(label)];
            g.mean = jg.at("mean").get<detail::Vec4>();
            g.covariance = jg.at("covariance").get<detail::Mat4>();
            g.count = jg.at("count").get<std::size_t>();
            g.degenerate = jg.at("degenerate").get<bool>();
            if (!g.degenerate) g.chol = detail::cholesky_psd(g.covariance);
        }
        model.global_mean = j.at("global_mean").get<detail::Vec4>();
        model.total_boxes = j.at("total_boxes").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("baseline model file: ") + e.what());
    }
    return model;
}

inline void save_run(const GenerationRun& run, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write generation run: " + path);
    for (const auto& sample : run.samples) {
        nlohmann::ordered_json j;
        j["labels"] = nlohmann::ordered_json::array();
        for (SectionLabel l : sample.labels) j["labels"].push_back(label_name(l));
        j["entries"] = nlohmann::ordered_json::array();
        for (const auto& e : sample.layout.entries) {
            nlohmann::ordered_json je;
            je["label"] = label_name(e.label);
            je["bbox"] = detail::bbox_to_json(e.bbox);
            j["entries"].push_back(std::move(je));
        }
        j["status"] = sample.failed ? "failed" : "ok";
        j["repairs"] = detail::repair_notes(sample);
        out << j.dump() << '\n';
    }
}

// The generator tag is not part of the file format; pass it back in when the
// caller knows which generator produced the file.
inline GenerationRun load_run(const std::string& path,
                              const std::string& generator = "") {
    std::ifstream in(path);
    if (!in) throw Error("cannot read generation run: " + path);
    GenerationRun run;
    run.generator = generator;
    const Provenance prov =
        generator == "baseline" ? Provenance::Baseline : Provenance::Llm;

    std::string line;
    long record = 0;
    while (std::getline(in, line)) {
        ++record;
        if (detail::trim(line).empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw ParseError("generation run line is not a JSON object", record);
        }
        GeneratedSample sample;
        sample.layout.provenance = prov;
        if (!j.contains("labels") || !j["labels"].is_array()) {
            throw ParseError("generation run record lacks labels", record);
        }
        for (const auto& jl : j["labels"]) {
            sample.labels.push_back(parse_label(jl.get<std::string>()));
        }
        if (!j.contains("status") || !j["status"].is_string()) {
            throw ParseError("generation run record lacks status", record);
        }
        const std::string status = j["status"].get<std::string>();
        if (status != "ok" && status != "failed") {
            throw ParseError("generation run status must be ok or failed", record);
        }
        sample.failed = status == "failed";
        for (const auto& je : j.value("entries", nlohmann::json::array())) {
            LayoutEntry e;
            e.label = parse_label(je.at("label").get<std::string>());
            e.bbox = detail::bbox_from_json(je.at("bbox"), record, nullptr);
            sample.layout.entries.push_back(e);
        }
        for (const auto& jr : j.value("repairs", nlohmann::json::array())) {
            sample.layout.notes.push_back(jr.get<std::string>());
        }
        run.samples.push_back(std::move(sample));
    }
    return run;
}

}  // namespace layoutforge
