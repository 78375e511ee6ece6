#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace kgdx {

/// Lowercase, trim, and collapse internal whitespace runs to one space.
std::string normalize_name(std::string_view text);

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);

/// Lowercased word tokens. Letters, digits, apostrophes and hyphens are word
/// characters; everything else separates.
std::vector<std::string> tokenize(std::string_view text);

/// Token index of the first occurrence of `phrase` inside `text`, matching on
/// whole tokens only; npos when absent.
std::size_t find_phrase(const std::vector<std::string>& text,
                        const std::vector<std::string>& phrase);

bool contains_digit(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> split(std::string_view text, char sep);

std::string capitalize_first(std::string text);

/// Substitutes `{name}` placeholders in one pass. Throws std::invalid_argument
/// when the template references a name missing from `values`.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values);

/// Fixed-precision decimal rendering ("%.<digits>f").
std::string format_fixed(double value, int digits);

}  // namespace kgdx
