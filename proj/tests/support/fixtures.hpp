#pragma once

// Shared fixtures: the published prompt/answer example and synthetic corpora
// for property tests.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "layoutforge/corpus.hpp"
#include "layoutforge/promptcodec.hpp"
#include "layoutforge/rng.hpp"

namespace fixtures {

inline constexpr const char* kExamplePrompt =
    "Provide bounding box coordinates x1, y1, x2, y2 for these sections of a "
    "receipt document: Logo, Contact, Header, InvoiceDetails, and Footer";

inline constexpr const char* kExampleAnswer =
    "Logo: 40, 3.143, 96.94, 11.00\n"
    "Contact: 9.44, 9.037, 33.33, 16.30\n"
    "Header: 3.61, 3.14, 98.61, 10.41\n"
    "InvoiceDetails: 8.33, 18.86, 92.77, 30.05\n"
    "Footer: 9.17, 90.76, 87.22, 100";

inline std::vector<layoutforge::SectionLabel> example_labels() {
    using layoutforge::SectionLabel;
    return {SectionLabel::Logo, SectionLabel::Contact, SectionLabel::Header,
            SectionLabel::InvoiceDetails, SectionLabel::Footer};
}

inline layoutforge::LayoutSample example_sample() {
    return layoutforge::parse_generation_answer(kExampleAnswer, example_labels());
}

inline layoutforge::Document example_document() {
    layoutforge::Document doc;
    doc.doc_id = "example-receipt";
    for (const auto& e : example_sample().entries) {
        layoutforge::SectionAnnotation section;
        section.label = e.label;
        section.bbox = e.bbox;
        section.decimals = e.decimals;
        doc.sections.push_back(section);
    }
    return doc;
}

inline layoutforge::BBox box(double x1, double y1, double x2, double y2) {
    return layoutforge::sanitize_bbox(x1, y1, x2, y2);
}

// A random but always-valid bounding box with up to 3 printed decimals.
inline layoutforge::BBox random_box(std::mt19937_64& gen) {
    auto coord = [&] {
        return std::round(layoutforge::uniform01(gen) * 100000.0) / 1000.0;
    };
    double x1 = coord(), x2 = coord(), y1 = coord(), y2 = coord();
    if (x1 > x2) std::swap(x1, x2);
    if (y1 > y2) std::swap(y1, y2);
    return layoutforge::BBox{x1, y1, x2, y2};
}

inline layoutforge::SectionLabel random_label(std::mt19937_64& gen) {
    return layoutforge::kAllLabels[layoutforge::bounded_uint(
        gen, layoutforge::kAllLabels.size())];
}

// Documents with random sections (1..6, possibly repeating labels) and a few
// strings placed inside or outside the sections.
inline layoutforge::DocumentSet synthetic_corpus(std::size_t n_docs,
                                                 std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    layoutforge::DocumentSet set;
    for (std::size_t d = 0; d < n_docs; ++d) {
        layoutforge::Document doc;
        doc.doc_id = "doc-" + std::to_string(d);
        const std::size_t n_sections = 1 + layoutforge::bounded_uint(gen, 6);
        for (std::size_t s = 0; s < n_sections; ++s) {
            layoutforge::SectionAnnotation section;
            section.label = random_label(gen);
            section.bbox = random_box(gen);
            doc.sections.push_back(section);
        }
        const std::size_t n_strings = layoutforge::bounded_uint(gen, 5);
        for (std::size_t s = 0; s < n_strings; ++s) {
            layoutforge::OcrString os;
            os.text = "string-" + std::to_string(d) + "-" + std::to_string(s);
            os.bbox = random_box(gen);
            doc.strings.push_back(os);
        }
        set.docs.push_back(std::move(doc));
    }
    return set;
}

}  // namespace fixtures
