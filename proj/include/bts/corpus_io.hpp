#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bts/traffic.hpp"

namespace bts {

/// Reads a JSON Lines corpus, one article per line:
///   {"article_id": str, "theta_hat": [float...], "trace": [[minute, impressions]...]}
/// Blank lines are skipped. Every article is validated; a failure throws
/// DataError carrying the 1-based line number and the offending field.
/// Non-fatal findings (an empty corpus) are appended to `warnings`.
std::vector<ArticleSpec> parse_corpus(std::istream& in, std::vector<std::string>* warnings = nullptr);
std::vector<ArticleSpec> parse_corpus(const std::filesystem::path& path,
                                      std::vector<std::string>* warnings = nullptr);

/// Parses one corpus line. Throws DataError with line() == 0.
ArticleSpec parse_article(const std::string& line);

/// Inverse of parse_article: keys in the documented order, no whitespace.
std::string serialize_article(const ArticleSpec& article);

void write_corpus(std::ostream& out, std::span<const ArticleSpec> corpus);
void write_corpus(const std::filesystem::path& path, std::span<const ArticleSpec> corpus);

}  // namespace bts
