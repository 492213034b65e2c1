#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace conceptrag {

/// ASCII lowercase; other bytes untouched.
std::string to_lower(std::string_view s);

/// Lowercase, punctuation to spaces, whitespace collapsed and trimmed.
/// Shared by answer matching and the IDF index so both see the same terms.
std::string normalize_text(std::string_view s);

/// Whitespace-delimited words.
std::vector<std::string> split_words(std::string_view s);
std::size_t word_count(std::string_view s);

/// A word in a document with its byte span [begin, end).
struct WordSpan {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Runs of letters and digits. Non-ASCII bytes count as letters except for
/// the UTF-8 general punctuation block (dashes, curly quotes), so "1972–73"
/// yields "1972" and "73".
std::vector<WordSpan> tokenize_words(std::string_view doc);

std::string trim(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace conceptrag
