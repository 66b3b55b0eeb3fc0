#include "comorbid/types.hpp"

#include <array>

#include "comorbid/error.hpp"

namespace comorbid {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

constexpr std::array<std::string_view, 22> kRoman = {
    "I",   "II",   "III",   "IV",  "V",   "VI",   "VII",   "VIII", "IX",  "X",    "XI",
    "XII", "XIII", "XIV",   "XV",  "XVI", "XVII", "XVIII", "XIX",  "XX",  "XXI",  "XXII"};

}  // namespace

bool Cui::is_valid(std::string_view text) {
  if (text.size() != 8 || text[0] != 'C') return false;
  for (std::size_t i = 1; i < 8; ++i)
    if (!is_digit(text[i])) return false;
  return true;
}

Cui::Cui(std::string_view text) : value_(text) {
  if (!is_valid(text)) throw ValidationError("invalid CUI '" + value_ + "' (expected C + 7 digits)");
}

bool IcdCode::is_valid(std::string_view text) {
  return text.size() == 3 && text[0] >= 'A' && text[0] <= 'Z' && is_digit(text[1]) &&
         is_digit(text[2]);
}

IcdCode::IcdCode(std::string_view text) : value_(text) {
  if (!is_valid(text))
    throw ValidationError("invalid ICD-10 code '" + value_ + "' (expected letter + 2 digits)");
}

int IcdCode::ordinal() const {
  return (value_[0] - 'A') * 100 + (value_[1] - '0') * 10 + (value_[2] - '0');
}

IcdCode IcdCode::from_ordinal(int ordinal) {
  if (ordinal < 0 || ordinal >= 2600) throw ArgumentError("ICD ordinal out of range");
  const char text[3] = {static_cast<char>('A' + ordinal / 100),
                        static_cast<char>('0' + (ordinal / 10) % 10),
                        static_cast<char>('0' + ordinal % 10)};
  return IcdCode(std::string_view(text, 3));
}

ChapterId::ChapterId(int number) : number_(number) {
  if (number < 1 || number > static_cast<int>(kRoman.size()))
    throw ValidationError("chapter number out of range: " + std::to_string(number));
}

ChapterId ChapterId::parse(std::string_view roman) {
  for (std::size_t i = 0; i < kRoman.size(); ++i)
    if (kRoman[i] == roman) return ChapterId(static_cast<int>(i) + 1);
  throw ValidationError("unknown ICD-10 chapter '" + std::string(roman) + "'");
}

std::string ChapterId::roman() const {
  if (number_ == 0) return "?";
  return std::string(kRoman[number_ - 1]);
}

std::string_view to_string(Temporality t) {
  return t == Temporality::Recent ? "recent" : "historic";
}

std::string_view to_string(Label l) {
  return l == Label::TrueMention ? "TrueMention" : "NotMention";
}

Temporality parse_temporality(std::string_view text) {
  if (text == "recent") return Temporality::Recent;
  if (text == "historic") return Temporality::Historic;
  throw ParseError("unknown temporality '" + std::string(text) + "'");
}

Label parse_label(std::string_view text) {
  if (text == "TrueMention") return Label::TrueMention;
  if (text == "NotMention") return Label::NotMention;
  throw ParseError("unknown label '" + std::string(text) + "'");
}

}  // namespace comorbid
