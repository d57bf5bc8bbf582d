#pragma once

#include <string_view>

// Shipped lexicons and reference tables, embedded at build time from data/.
namespace stigscan::default_data {

extern const std::string_view doubt_markers_lexicon;
extern const std::string_view stigmatizing_labels_lexicon;
extern const std::string_view provider_map;
extern const std::string_view ethnicity_map;
extern const std::string_view icd9_code_map;
extern const std::string_view abbreviations;

}  // namespace stigscan::default_data
