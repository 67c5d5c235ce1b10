#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "layoutforge/errors.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/labels.hpp"
#include "layoutforge/rng.hpp"

namespace layoutforge {

// One manually annotated main section of a document. `decimals` remembers the
// printed precision of each coordinate when the annotation was parsed from
// text (-1 = unknown, render shortest); it only affects re-serialization.
struct SectionAnnotation {
    SectionLabel label = SectionLabel::Undefined;
    BBox bbox;
    std::array<std::int8_t, 4> decimals{-1, -1, -1, -1};
};

struct OcrString {
    std::string text;
    BBox bbox;
};

struct Document {
    std::string doc_id;
    std::vector<SectionAnnotation> sections;
    std::vector<OcrString> strings;
};

struct DocumentSet {
    std::vector<Document> docs;

    bool empty() const { return docs.empty(); }
    std::size_t size() const { return docs.size(); }
};

// An OCR string with its ground-truth section label and, after inference, the
// model's prediction. Records whose true label is Undefined are flagged for
// removal downstream but kept for auditability.
struct ClassifiedString {
    std::string text;
    BBox bbox;
    SectionLabel true_label = SectionLabel::Undefined;
    std::optional<SectionLabel> predicted_label;
    std::string anomaly;  // empty when the prediction arrived cleanly
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline BBox bbox_from_json(const nlohmann::json& arr, long record,
                           unsigned* repairs = nullptr) {
    if (!arr.is_array() || arr.size() != 4) {
        throw ParseError("bbox must be an array of 4 numbers", record);
    }
    for (const auto& v : arr) {
        if (!v.is_number()) throw ParseError("bbox coordinates must be numbers", record);
    }
    return sanitize_bbox(arr[0].get<double>(), arr[1].get<double>(),
                         arr[2].get<double>(), arr[3].get<double>(), repairs);
}

inline nlohmann::ordered_json bbox_to_json(const BBox& b) {
    return nlohmann::ordered_json::array({b.x1, b.y1, b.x2, b.y2});
}

inline std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Canonical corpus file: UTF-8 JSON Lines, one document per line:
//   {"doc_id": str,
//    "sections": [{"label": str, "bbox": [x1,y1,x2,y2]}],
//    "strings":  [{"text": str, "bbox": [x1,y1,x2,y2]}]}
// ---------------------------------------------------------------------------

inline Document document_from_json(const nlohmann::json& j, long record,
                                   std::vector<std::string>* warnings = nullptr) {
    if (!j.is_object() || !j.contains("doc_id") || !j["doc_id"].is_string()) {
        throw ParseError("document record needs a string doc_id", record);
    }
    Document doc;
    doc.doc_id = j["doc_id"].get<std::string>();
    unsigned repairs = kRepairNone;
    if (j.contains("sections")) {
        for (const auto& s : j["sections"]) {
            SectionAnnotation section;
            if (!s.contains("label") || !s["label"].is_string()) {
                throw ParseError("section needs a label", record);
            }
            section.label = parse_label(s["label"].get<std::string>());
            section.bbox = detail::bbox_from_json(s.at("bbox"), record, &repairs);
            doc.sections.push_back(section);
        }
    }
    if (j.contains("strings")) {
        for (const auto& s : j["strings"]) {
            OcrString os;
            if (!s.contains("text") || !s["text"].is_string()) {
                throw ParseError("string needs text", record);
            }
            os.text = detail::trim(s["text"].get<std::string>());
            if (os.text.empty()) {
                throw ParseError("string text empty after trimming", record);
            }
            os.bbox = detail::bbox_from_json(s.at("bbox"), record, &repairs);
            doc.strings.push_back(os);
        }
    }
    if (repairs != kRepairNone && warnings) {
        warnings->push_back("doc " + doc.doc_id + ": coordinates repaired");
    }
    return doc;
}

inline nlohmann::ordered_json document_to_json(const Document& doc) {
    nlohmann::ordered_json j;
    j["doc_id"] = doc.doc_id;
    j["sections"] = nlohmann::ordered_json::array();
    for (const auto& s : doc.sections) {
        j["sections"].push_back(
            {{"label", label_name(s.label)}, {"bbox", detail::bbox_to_json(s.bbox)}});
    }
    j["strings"] = nlohmann::ordered_json::array();
    for (const auto& s : doc.strings) {
        j["strings"].push_back({{"text", s.text}, {"bbox", detail::bbox_to_json(s.bbox)}});
    }
    return j;
}

inline DocumentSet load_corpus(const std::string& path,
                               std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open corpus file: " + path);
    DocumentSet set;
    std::string line;
    long record = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) {
            ++record;
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), record);
        }
        set.docs.push_back(document_from_json(j, record, warnings));
        ++record;
    }
    return set;
}

inline void save_corpus(const DocumentSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write corpus file: " + path);
    for (const auto& doc : set.docs) {
        out << document_to_json(doc).dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Label Studio import: rectanglelabels results with x,y,width,height page
// percentages, converted to (x1,y1,x2,y2) = (x, y, x+width, y+height).
// ---------------------------------------------------------------------------

inline DocumentSet import_label_studio(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open Label Studio export: " + path);
    nlohmann::json tasks;
    try {
        tasks = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid Label Studio JSON: ") + e.what());
    }
    if (!tasks.is_array()) throw ParseError("Label Studio export must be a task array");

    DocumentSet set;
    long index = 0;
    for (const auto& task : tasks) {
        Document doc;
        if (task.contains("id") && task["id"].is_number_integer()) {
            doc.doc_id = std::to_string(task["id"].get<long long>());
        } else {
            doc.doc_id = "task-" + std::to_string(index);
        }
        const char* key = task.contains("annotations") ? "annotations" : "completions";
        if (task.contains(key) && task[key].is_array() && !task[key].empty()) {
            const auto& annotation = task[key].front();
            if (!annotation.contains("result") || !annotation["result"].is_array()) {
                throw ParseError("annotation without result array", index);
            }
            for (const auto& item : annotation["result"]) {
                if (!item.contains("type") || item["type"] != "rectanglelabels") continue;
                if (!item.contains("value")) throw ParseError("result without value", index);
                const auto& value = item["value"];
                if (!value.contains("x") || !value.contains("y") ||
                    !value.contains("width") || !value.contains("height") ||
                    !value.contains("rectanglelabels") ||
                    !value["rectanglelabels"].is_array() ||
                    value["rectanglelabels"].empty()) {
                    throw ParseError("malformed rectanglelabels value", index);
                }
                double x = value["x"].get<double>();
                double y = value["y"].get<double>();
                double w = value["width"].get<double>();
                double h = value["height"].get<double>();
                SectionAnnotation section;
                section.label = parse_label(value["rectanglelabels"][0].get<std::string>());
                section.bbox = sanitize_bbox(x, y, x + w, y + h);
                doc.sections.push_back(section);
            }
        }
        set.docs.push_back(std::move(doc));
        ++index;
    }
    return set;
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

namespace detail {

// Shared split core: a seeded shuffle picks the train membership, both halves
// keep the original input order.
inline std::vector<bool> train_mask(std::size_t n, double train_fraction,
                                    std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("train_fraction must be in (0, 1)");
    }
    std::size_t train_size = round_half_up(static_cast<double>(n) * train_fraction);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 gen(seed);
    deterministic_shuffle(order, gen);
    std::vector<bool> mask(n, false);
    for (std::size_t i = 0; i < train_size && i < n; ++i) mask[order[i]] = true;
    return mask;
}

}  // namespace detail

inline std::pair<DocumentSet, DocumentSet> split(const DocumentSet& set,
                                                 double train_fraction,
                                                 std::uint64_t seed) {
    if (set.empty()) throw EmptyCorpusError();
    auto mask = detail::train_mask(set.size(), train_fraction, seed);
    DocumentSet train;
    DocumentSet test;
    for (std::size_t i = 0; i < set.size(); ++i) {
        (mask[i] ? train : test).docs.push_back(set.docs[i]);
    }
    return {std::move(train), std::move(test)};
}

// Splits classified strings after dropping the Undefined-flagged ones.
inline std::pair<std::vector<ClassifiedString>, std::vector<ClassifiedString>>
split_strings(const std::vector<ClassifiedString>& strings, double train_fraction,
              std::uint64_t seed) {
    std::vector<ClassifiedString> kept;
    for (const auto& s : strings) {
        if (s.true_label != SectionLabel::Undefined) kept.push_back(s);
    }
    if (kept.empty()) throw EmptyCorpusError();
    auto mask = detail::train_mask(kept.size(), train_fraction, seed);
    std::vector<ClassifiedString> train;
    std::vector<ClassifiedString> test;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        (mask[i] ? train : test).push_back(kept[i]);
    }
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Sectionization: each string takes the label of the smallest containing
// section; strings contained by no section become Undefined.
// ---------------------------------------------------------------------------

inline std::vector<ClassifiedString> assign_sections(const Document& doc) {
    std::vector<ClassifiedString> out;
    out.reserve(doc.strings.size());
    for (const auto& s : doc.strings) {
        ClassifiedString cs;
        cs.text = s.text;
        cs.bbox = s.bbox;
        cs.true_label = SectionLabel::Undefined;
        double best_area = 0.0;
        for (const auto& section : doc.sections) {
            if (!contains(section.bbox, s.bbox)) continue;
            double a = area(section.bbox);
            // Exact area ties keep the earlier section.
            if (cs.true_label == SectionLabel::Undefined || a < best_area) {
                cs.true_label = section.label;
                best_area = a;
            }
        }
        out.push_back(std::move(cs));
    }
    return out;
}

inline std::array<std::size_t, kLabelCount> class_counts(const DocumentSet& set) {
    std::array<std::size_t, kLabelCount> counts{};
    for (const auto& doc : set.docs) {
        for (const auto& section : doc.sections) {
            counts[label_index(section.label)]++;
        }
    }
    return counts;
}

// ---------------------------------------------------------------------------
// Classified-string JSON Lines:
//   {"text": str, "bbox": [..], "true": str, "pred": str|null,
//    "anomaly": str|null}
// Pre-inference files omit pred/anomaly; Undefined records carry
// "removed": true instead of being deleted.
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json classified_string_to_json(const ClassifiedString& s) {
    nlohmann::ordered_json j;
    j["text"] = s.text;
    j["bbox"] = detail::bbox_to_json(s.bbox);
    j["true"] = label_name(s.true_label);
    if (s.predicted_label) {
        j["pred"] = label_name(*s.predicted_label);
        j["anomaly"] = s.anomaly.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(s.anomaly);
    } else if (s.true_label == SectionLabel::Undefined) {
        j["removed"] = true;
    }
    return j;
}

inline ClassifiedString classified_string_from_json(const nlohmann::json& j, long record) {
    if (!j.is_object() || !j.contains("text") || !j.contains("bbox") || !j.contains("true")) {
        throw ParseError("classified string needs text, bbox and true", record);
    }
    ClassifiedString s;
    s.text = j["text"].get<std::string>();
    s.bbox = detail::bbox_from_json(j["bbox"], record);
    std::string name = j["true"].get<std::string>();
    s.true_label = iequals(name, "Undefined") ? SectionLabel::Undefined : parse_label(name);
    if (j.contains("pred") && j["pred"].is_string()) {
        std::string pred = j["pred"].get<std::string>();
        s.predicted_label = iequals(pred, "Undefined") ? SectionLabel::Undefined
                                                       : parse_label(pred);
    }
    if (j.contains("anomaly") && j["anomaly"].is_string()) {
        s.anomaly = j["anomaly"].get<std::string>();
    }
    return s;
}

inline std::vector<ClassifiedString> load_strings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open strings file: " + path);
    std::vector<ClassifiedString> out;
    std::string line;
    long record = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) {
            ++record;
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), record);
        }
        out.push_back(classified_string_from_json(j, record));
        ++record;
    }
    return out;
}

inline void save_strings(const std::vector<ClassifiedString>& strings,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write strings file: " + path);
    for (const auto& s : strings) {
        out << classified_string_to_json(s).dump() << '\n';
    }
}

}  // namespace layoutforge
