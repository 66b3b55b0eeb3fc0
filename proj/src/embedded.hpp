#pragma once

#include <string_view>

namespace comorbid::embedded {

extern const std::string_view chapter_table;
extern const std::string_view abbreviations;
extern const std::string_view triggers;
extern const std::string_view synthetic_mapping;
extern const std::string_view synthetic_lexicon;

}  // namespace comorbid::embedded
