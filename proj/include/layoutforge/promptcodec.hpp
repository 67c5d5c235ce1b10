#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "layoutforge/corpus.hpp"
#include "layoutforge/errors.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/labels.hpp"

namespace layoutforge {

inline constexpr std::size_t kMaxClassificationBatch = 60;

enum class Provenance { GroundTruth, Llm, Baseline };

// One "Label: x1, y1, x2, y2" answer line. `decimals` carries the printed
// precision observed at parse time so re-rendering reproduces the source text;
// -1 renders the shortest form that round-trips the double exactly.
struct LayoutEntry {
    SectionLabel label = SectionLabel::Undefined;
    BBox bbox;
    unsigned repairs = kRepairNone;
    std::array<std::int8_t, 4> decimals{-1, -1, -1, -1};
};

struct LayoutSample {
    std::vector<LayoutEntry> entries;
    Provenance provenance = Provenance::GroundTruth;
    std::vector<std::string> notes;  // dropped extra labels, repair summaries

    bool repaired() const {
        for (const auto& e : entries) {
            if (e.repairs != kRepairNone) return true;
        }
        return false;
    }
};

// Label/coordinate equality; rendering precision and notes don't count.
inline bool same_entries(const LayoutSample& a, const LayoutSample& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        if (a.entries[i].label != b.entries[i].label) return false;
        if (!(a.entries[i].bbox == b.entries[i].bbox)) return false;
    }
    return true;
}

inline LayoutSample layout_of(const Document& doc) {
    LayoutSample sample;
    sample.provenance = Provenance::GroundTruth;
    for (const auto& s : doc.sections) {
        LayoutEntry e;
        e.label = s.label;
        e.bbox = s.bbox;
        e.decimals = s.decimals;
        sample.entries.push_back(e);
    }
    return sample;
}

inline std::vector<SectionLabel> labels_of(const Document& doc) {
    std::vector<SectionLabel> labels;
    labels.reserve(doc.sections.size());
    for (const auto& s : doc.sections) labels.push_back(s.label);
    return labels;
}

namespace detail {

inline std::string format_coordinate(double v, std::int8_t decimals) {
    char buf[64];
    if (decimals < 0) {
        auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
        return std::string(buf, res.ptr);
    }
    std::snprintf(buf, sizeof(buf), "%.*f", static_cast<int>(decimals), v);
    return std::string(buf);
}

inline std::string format_percent2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
}

struct NumberToken {
    double value = 0.0;
    std::int8_t decimals = -1;
};

inline bool parse_number_token(std::string_view token, NumberToken& out) {
    std::string t = trim(token);
    if (!t.empty() && t.front() == '+') t.erase(t.begin());
    if (t.empty()) return false;
    double v = 0.0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v,
                               std::chars_format::general);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
        return false;
    }
    out.value = v;
    // Record the printed precision only when reprinting with it reproduces
    // the token exactly; otherwise the shortest round-trip form (-1) already
    // preserves the value and stays canonical.
    out.decimals = -1;
    if (t.find_first_of("eE") == std::string::npos) {
        auto dot = t.find('.');
        const std::size_t d = dot == std::string::npos ? 0 : t.size() - dot - 1;
        if (d <= 120) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%.*f", static_cast<int>(d), v);
            if (t == buf) out.decimals = static_cast<std::int8_t>(d);
        }
    }
    return true;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Generation prompt/answer grammar
// ---------------------------------------------------------------------------

// "Provide bounding box coordinates x1, y1, x2, y2 for these sections of a
// receipt document: <labels>", comma-separated, "and" before the last label
// when three or more are listed. Duplicates render repeatedly in order.
inline std::string build_generation_prompt(const std::vector<SectionLabel>& labels) {
    if (labels.empty()) throw EmptyLabelsError();
    for (SectionLabel l : labels) {
        if (l == SectionLabel::Undefined) {
            throw std::invalid_argument("Undefined cannot appear in a generation prompt");
        }
    }
    std::string out =
        "Provide bounding box coordinates x1, y1, x2, y2 for these sections of a "
        "receipt document: ";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i > 0) {
            out += ", ";
            if (labels.size() >= 3 && i + 1 == labels.size()) out += "and ";
        }
        out += label_name(labels[i]);
    }
    return out;
}

// One "Label: x1, y1, x2, y2" line per entry, newline-separated, no trailing
// newline.
inline std::string render_generation_answer(const LayoutSample& sample) {
    std::string out;
    for (std::size_t i = 0; i < sample.entries.size(); ++i) {
        const auto& e = sample.entries[i];
        if (i > 0) out += '\n';
        out += label_name(e.label);
        out += ": ";
        out += detail::format_coordinate(e.bbox.x1, e.decimals[0]);
        out += ", ";
        out += detail::format_coordinate(e.bbox.y1, e.decimals[1]);
        out += ", ";
        out += detail::format_coordinate(e.bbox.x2, e.decimals[2]);
        out += ", ";
        out += detail::format_coordinate(e.bbox.y2, e.decimals[3]);
    }
    return out;
}

// Lenient parse of a generated answer. Labels match case-insensitively, extra
// whitespace and trailing punctuation are tolerated, out-of-range coordinates
// are clamped and inverted corners swapped (repair flags). Entries are aligned
// against the expected label multiset: a known label beyond its expected count
// is dropped with a note; an expected label that never appears is an error.
inline LayoutSample parse_generation_answer(std::string_view text,
                                            const std::vector<SectionLabel>& expected_labels) {
    std::array<int, kLabelCount + 1> remaining{};
    for (SectionLabel l : expected_labels) remaining[label_index(l)]++;

    LayoutSample sample;
    sample.provenance = Provenance::Llm;

    long line_no = 0;
    for (std::string_view raw : detail::split_lines(text)) {
        ++line_no;
        std::string line = detail::trim(raw);
        while (!line.empty() && (line.back() == '.' || line.back() == ';' ||
                                 line.back() == ',' || line.back() == '!')) {
            line.pop_back();
        }
        if (line.empty()) continue;

        auto colon = line.find(':');
        if (colon == std::string::npos) {
            throw AnswerParseError(AnswerParseError::Kind::MalformedLine,
                                   "line " + std::to_string(line_no) +
                                       " has no 'Label:' prefix",
                                   line_no);
        }
        std::string name = detail::trim(std::string_view(line).substr(0, colon));
        auto label = try_parse_label(name);
        if (!label) {
            throw AnswerParseError(AnswerParseError::Kind::UnknownLabel,
                                   "unknown label '" + name + "' on line " +
                                       std::to_string(line_no),
                                   line_no);
        }

        std::vector<detail::NumberToken> numbers;
        std::string_view rest = std::string_view(line).substr(colon + 1);
        std::size_t start = 0;
        while (start <= rest.size()) {
            std::size_t comma = rest.find(',', start);
            std::string_view field = comma == std::string_view::npos
                                         ? rest.substr(start)
                                         : rest.substr(start, comma - start);
            detail::NumberToken token;
            if (!detail::parse_number_token(field, token)) {
                throw AnswerParseError(AnswerParseError::Kind::MalformedLine,
                                       "line " + std::to_string(line_no) +
                                           " is not 'Label: x1, y1, x2, y2'",
                                       line_no);
            }
            numbers.push_back(token);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (numbers.size() != 4) {
            throw AnswerParseError(AnswerParseError::Kind::MalformedLine,
                                   "line " + std::to_string(line_no) + " has " +
                                       std::to_string(numbers.size()) +
                                       " coordinates, expected 4",
                                   line_no);
        }

        if (remaining[label_index(*label)] == 0) {
            sample.notes.push_back(std::string("dropped unexpected label ") +
                                   label_name(*label) + " on line " +
                                   std::to_string(line_no));
            continue;
        }
        remaining[label_index(*label)]--;

        LayoutEntry entry;
        entry.label = *label;
        entry.bbox = sanitize_bbox(numbers[0].value, numbers[1].value,
                                   numbers[2].value, numbers[3].value, &entry.repairs);
        entry.decimals = {numbers[0].decimals, numbers[1].decimals,
                          numbers[2].decimals, numbers[3].decimals};
        if (entry.repairs & kRepairSwappedX) std::swap(entry.decimals[0], entry.decimals[2]);
        if (entry.repairs & kRepairSwappedY) std::swap(entry.decimals[1], entry.decimals[3]);
        sample.entries.push_back(entry);
    }

    for (SectionLabel l : kAllLabels) {
        if (remaining[label_index(l)] > 0) {
            throw AnswerParseError(AnswerParseError::Kind::MissingLabel,
                                   std::string("expected label ") + label_name(l) +
                                       " missing from answer");
        }
    }
    return sample;
}

// ---------------------------------------------------------------------------
// Classification prompt protocol
// ---------------------------------------------------------------------------

// "<text> <x1> <y1> <x2> <y2>", single spaces, two decimals.
inline std::string augment_with_bbox(const OcrString& s) {
    return s.text + ' ' + detail::format_percent2(s.bbox.x1) + ' ' +
           detail::format_percent2(s.bbox.y1) + ' ' +
           detail::format_percent2(s.bbox.x2) + ' ' +
           detail::format_percent2(s.bbox.y2);
}

inline std::string augment_with_bbox(const ClassifiedString& s) {
    return augment_with_bbox(OcrString{s.text, s.bbox});
}

inline std::string build_classification_prompt(const std::vector<ClassifiedString>& examples,
                                               const std::vector<ClassifiedString>& batch,
                                               bool with_bbox) {
    if (batch.empty()) throw EmptyBatchError();
    if (batch.size() > kMaxClassificationBatch) {
        throw BatchTooLargeError(batch.size(), kMaxClassificationBatch);
    }
    std::string out =
        "Classify each numbered string from a receipt document into exactly one "
        "of these sections: ";
    for (std::size_t i = 0; i < kAllLabels.size(); ++i) {
        if (i > 0) out += ", ";
        out += label_name(kAllLabels[i]);
    }
    out += ".\nAnswer with one line per string in the form \"<number>. <section>\".\n";
    if (!examples.empty()) {
        out += "Examples:\n";
        for (const auto& e : examples) {
            out += with_bbox ? augment_with_bbox(e) : e.text;
            out += " -> ";
            out += label_name(e.true_label);
            out += '\n';
        }
    }
    out += "Strings:";
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out += '\n';
        out += std::to_string(i + 1);
        out += ". ";
        out += with_bbox ? augment_with_bbox(batch[i]) : batch[i].text;
    }
    return out;
}

struct ClassificationAnswer {
    std::vector<SectionLabel> predictions;  // one per index, Undefined-filled
    std::vector<std::size_t> missed;        // 1-based indices with no answer line
    std::vector<std::size_t> duplicated;    // answered more than once, first kept
    std::size_t invalid = 0;                // answered with non-taxonomy text
};

// Aligns answer lines "N. <Label>" (or "N: <Label>") to batch indices.
// Everything irregular degrades to an anomaly; nothing throws.
inline ClassificationAnswer parse_classification_answer(std::string_view text,
                                                        std::size_t batch_size) {
    ClassificationAnswer out;
    out.predictions.assign(batch_size, SectionLabel::Undefined);
    std::vector<bool> answered(batch_size, false);

    for (std::string_view raw : detail::split_lines(text)) {
        std::string line = detail::trim(raw);
        if (line.empty()) continue;
        std::size_t pos = 0;
        while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) {
            ++pos;
        }
        if (pos == 0 || pos >= line.size()) continue;
        if (line[pos] != '.' && line[pos] != ':') continue;
        std::size_t index = 0;
        auto res = std::from_chars(line.data(), line.data() + pos, index);
        if (res.ec != std::errc() || index < 1 || index > batch_size) continue;

        if (answered[index - 1]) {
            out.duplicated.push_back(index);
            continue;
        }
        answered[index - 1] = true;

        std::string name = detail::trim(std::string_view(line).substr(pos + 1));
        while (!name.empty() && (name.back() == '.' || name.back() == ',')) name.pop_back();
        if (auto label = try_parse_label(name)) {
            out.predictions[index - 1] = *label;
        } else {
            out.invalid++;
        }
    }

    for (std::size_t i = 0; i < batch_size; ++i) {
        if (!answered[i]) out.missed.push_back(i + 1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fine-tune corpus export
// ---------------------------------------------------------------------------

// The LoRA fine-tuning hyperparameters, emitted verbatim as a manifest for
// downstream trainers. Training itself is out of scope here.
struct FineTuneRecipe {
    int lora_rank = 32;
    int lora_scaling = 64;
    double lora_dropout = 0.05;
    std::string bias = "none";
    std::string target = "all linear layers";
    int epochs = 4;
    double learning_rate = 1.5e-4;
    std::string optimizer_name = "AdamW";
    std::string quantization_note = "4-bit";
};

inline nlohmann::ordered_json recipe_to_json(const FineTuneRecipe& r) {
    nlohmann::ordered_json j;
    j["lora_rank"] = r.lora_rank;
    j["lora_scaling"] = r.lora_scaling;
    j["lora_dropout"] = r.lora_dropout;
    j["bias"] = r.bias;
    j["target"] = r.target;
    j["epochs"] = r.epochs;
    j["learning_rate"] = r.learning_rate;
    j["optimizer_name"] = r.optimizer_name;
    j["quantization_note"] = r.quantization_note;
    return j;
}

// Writes one {"prompt", "completion"} record per document plus a sidecar
// manifest carrying the recipe. Documents without sections cannot form a
// prompt and are skipped with a warning. Returns the record count.
inline std::size_t export_finetune_corpus(const DocumentSet& train,
                                          const FineTuneRecipe& recipe,
                                          const std::string& out_path,
                                          const std::string& manifest_path,
                                          std::vector<std::string>* warnings = nullptr) {
    if (train.empty()) throw EmptyCorpusError();
    std::ofstream out(out_path);
    if (!out) throw Error("cannot write fine-tune corpus: " + out_path);
    std::size_t count = 0;
    for (const auto& doc : train.docs) {
        if (doc.sections.empty()) {
            if (warnings) {
                warnings->push_back("doc " + doc.doc_id + " has no sections, skipped");
            }
            continue;
        }
        nlohmann::ordered_json record;
        record["prompt"] = build_generation_prompt(labels_of(doc));
        record["completion"] = render_generation_answer(layout_of(doc));
        out << record.dump() << '\n';
        ++count;
    }
    std::ofstream manifest(manifest_path);
    if (!manifest) throw Error("cannot write manifest: " + manifest_path);
    manifest << recipe_to_json(recipe).dump(2) << '\n';
    return count;
}

}  // namespace layoutforge
