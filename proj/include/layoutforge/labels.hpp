#pragma once

#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>

#include "layoutforge/errors.hpp"

namespace layoutforge {

// The 8 receipt section categories plus the Undefined sentinel used for
// strings that fall outside every annotated section. Undefined never appears
// in generation prompts or ground-truth section annotations.
enum class SectionLabel {
    Logo,
    Header,
    VatTableSummary,
    PaymentInformation,
    LineItemTable,
    Footer,
    Contact,
    InvoiceDetails,
    Undefined,
};

inline constexpr std::size_t kLabelCount = 8;

inline constexpr std::array<SectionLabel, kLabelCount> kAllLabels = {
    SectionLabel::Logo,
    SectionLabel::Header,
    SectionLabel::VatTableSummary,
    SectionLabel::PaymentInformation,
    SectionLabel::LineItemTable,
    SectionLabel::Footer,
    SectionLabel::Contact,
    SectionLabel::InvoiceDetails,
};

// Row order of the layout-evaluation report tables.
inline constexpr std::array<SectionLabel, kLabelCount> kReportLabelOrder = {
    SectionLabel::Contact,
    SectionLabel::Logo,
    SectionLabel::Header,
    SectionLabel::InvoiceDetails,
    SectionLabel::LineItemTable,
    SectionLabel::VatTableSummary,
    SectionLabel::PaymentInformation,
    SectionLabel::Footer,
};

inline const char* label_name(SectionLabel label) {
    switch (label) {
        case SectionLabel::Logo: return "Logo";
        case SectionLabel::Header: return "Header";
        case SectionLabel::VatTableSummary: return "VAT_Table_Summary";
        case SectionLabel::PaymentInformation: return "PaymentInformation";
        case SectionLabel::LineItemTable: return "LineItemTable";
        case SectionLabel::Footer: return "Footer";
        case SectionLabel::Contact: return "Contact";
        case SectionLabel::InvoiceDetails: return "InvoiceDetails";
        case SectionLabel::Undefined: return "Undefined";
    }
    return "Undefined";
}

// Short row codes used by the report tables.
inline const char* label_code(SectionLabel label) {
    switch (label) {
        case SectionLabel::Logo: return "L";
        case SectionLabel::Header: return "H";
        case SectionLabel::VatTableSummary: return "VAT";
        case SectionLabel::PaymentInformation: return "P";
        case SectionLabel::LineItemTable: return "LIT";
        case SectionLabel::Footer: return "F";
        case SectionLabel::Contact: return "C";
        case SectionLabel::InvoiceDetails: return "I";
        case SectionLabel::Undefined: return "U";
    }
    return "U";
}

inline std::size_t label_index(SectionLabel label) {
    return static_cast<std::size_t>(label);
}

inline bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i]))) {
            return false;
        }
    }
    return true;
}

// Case-insensitive lookup; does not match the Undefined sentinel.
inline std::optional<SectionLabel> try_parse_label(std::string_view name) {
    for (SectionLabel label : kAllLabels) {
        if (iequals(name, label_name(label))) return label;
    }
    return std::nullopt;
}

inline SectionLabel parse_label(std::string_view name) {
    if (auto label = try_parse_label(name)) return *label;
    throw UnknownLabelError(std::string(name));
}

}  // namespace layoutforge
