#include "bts/corpus_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "bts/errors.hpp"

namespace bts {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
    throw DataError(field + ": " + message, 0, field);
}

bool is_blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

ArticleSpec parse_article(const std::string& line) {
    json doc;
    try {
        doc = json::parse(line);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("malformed JSON: ") + e.what(), 0, "");
    }
    if (!doc.is_object()) fail("<line>", "expected a JSON object");

    ArticleSpec spec;
    const auto id = doc.find("article_id");
    if (id == doc.end()) fail("article_id", "missing");
    if (!id->is_string()) fail("article_id", "expected a string");
    spec.article_id = id->get<std::string>();
    if (spec.article_id.empty()) fail("article_id", "must not be empty");

    const auto theta = doc.find("theta_hat");
    if (theta == doc.end()) fail("theta_hat", "missing");
    if (!theta->is_array()) fail("theta_hat", "expected an array of numbers");
    for (std::size_t k = 0; k < theta->size(); ++k) {
        const auto& v = (*theta)[k];
        const std::string field = "theta_hat[" + std::to_string(k) + "]";
        if (!v.is_number()) fail(field, "expected a number");
        const double t = v.get<double>();
        if (!(t >= 0.0 && t <= 1.0)) fail(field, v.dump() + " is outside [0, 1]");
        spec.theta_hat.push_back(t);
    }

    const auto trace = doc.find("trace");
    if (trace == doc.end()) fail("trace", "missing");
    if (!trace->is_array()) fail("trace", "expected an array of [minute, impressions] pairs");
    std::vector<TraceEntry> entries;
    entries.reserve(trace->size());
    for (std::size_t i = 0; i < trace->size(); ++i) {
        const auto& pair = (*trace)[i];
        const std::string field = "trace[" + std::to_string(i) + "]";
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
            !pair[1].is_number_integer()) {
            fail(field, "expected [minute:int, impressions:int]");
        }
        entries.push_back({pair[0].get<std::int64_t>(), pair[1].get<std::int64_t>()});
    }
    spec.trace = ImpressionTrace(std::move(entries));
    spec.validate();
    return spec;
}

std::vector<ArticleSpec> parse_corpus(std::istream& in, std::vector<std::string>* warnings) {
    std::vector<ArticleSpec> corpus;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        try {
            ArticleSpec spec = parse_article(line);
            if (!seen.insert(spec.article_id).second) {
                fail("article_id", "duplicate id '" + spec.article_id + "'");
            }
            corpus.push_back(std::move(spec));
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what(), line_no, e.field());
        }
    }
    if (corpus.empty() && warnings != nullptr) warnings->push_back("corpus is empty");
    return corpus;
}

std::vector<ArticleSpec> parse_corpus(const std::filesystem::path& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw DataError("corpus: cannot open '" + path.string() + "'", 0, "corpus");
    return parse_corpus(in, warnings);
}

std::string serialize_article(const ArticleSpec& article) {
    ordered_json doc;
    doc["article_id"] = article.article_id;
    doc["theta_hat"] = article.theta_hat;
    ordered_json trace = ordered_json::array();
    for (const auto& e : article.trace.entries()) trace.push_back({e.minute, e.impressions});
    doc["trace"] = std::move(trace);
    return doc.dump();
}

void write_corpus(std::ostream& out, std::span<const ArticleSpec> corpus) {
    for (const auto& article : corpus) out << serialize_article(article) << '\n';
}

void write_corpus(const std::filesystem::path& path, std::span<const ArticleSpec> corpus) {
    std::ofstream out(path);
    if (!out) throw DataError("corpus: cannot write '" + path.string() + "'", 0, "corpus");
    write_corpus(out, corpus);
}

}  // namespace bts
