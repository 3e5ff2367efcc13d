#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "distress/panel.hpp"

namespace distress {

using Sentence = std::vector<std::string>;

struct Document {
    std::string firm_id;
    int year = 0;
    std::vector<Sentence> sentences;  // lower-cased tokens, punctuation stripped
    std::size_t total_words = 0;
};

struct SplitOptions {
    std::vector<std::string> abbreviations = {"mr", "mrs", "ms", "dr", "inc", "corp", "co", "ltd",
                                              "no", "vs", "etc", "jan", "feb", "mar", "apr", "jun",
                                              "jul", "aug", "sep", "sept", "oct", "nov", "dec", "st"};
};

/// A sentence ends at '.', '?' or '!' followed by whitespace and an uppercase
/// letter, unless the word before a period is a listed abbreviation.
std::vector<std::string> split_sentences(std::string_view text, const SplitOptions& options = {});

/// Whitespace tokens, lower-cased, stripped of non-alphanumerics; tokens
/// without any letter are dropped.
Sentence tokenize(std::string_view sentence);

Document make_document(std::string firm_id, int year, std::string_view text, const SplitOptions& options = {});
Document make_document(std::string firm_id, int year, std::vector<Sentence> sentences);

enum class LexiconCategory { positive = 0, negative = 1, uncertainty = 2, litigious = 3 };

struct Lexicon {
    std::array<std::unordered_set<std::string>, 4> categories;
    std::unordered_map<std::string, double> valence;   // in [-1, 1]
    std::unordered_set<std::string> negators;
    std::unordered_map<std::string, double> boosters;  // word -> multiplier

    const std::unordered_set<std::string>& words(LexiconCategory c) const {
        return categories[static_cast<std::size_t>(c)];
    }

    /// Tiny lexicon for tests and examples; not a substitute for licensed lists.
    static Lexicon builtin();
};

void validate(const Lexicon& lexicon);

struct LexiconScores {
    double positive = 0.0;
    double negative = 0.0;
    double uncertainty = 0.0;
    double litigious = 0.0;
};

/// Category hits per thousand words.
LexiconScores lexicon_counts(const Document& doc, const Lexicon& lexicon);

/// Vowel-group heuristic: runs of [aeiouy] count as one syllable; a final
/// silent 'e' (not "-le" after a consonant) is dropped; every word has >= 1.
int count_syllables(std::string_view word);

/// 0.4 * (words per sentence + 100 * share of words with >= 3 syllables).
double gunning_fog(const Document& doc);

struct PolarityOptions {
    int negation_window = 3;
    double alpha = 15.0;
};

double sentence_polarity(const Sentence& tokens, const Lexicon& lexicon, const PolarityOptions& options = {});
double mean_sentence_polarity(const Document& doc, const Lexicon& lexicon, const PolarityOptions& options = {});

enum class SentenceLabel { positive, negative, neutral };

SentenceLabel parse_sentence_label(std::string_view text);

/// (#positive - #negative) / #sentences.
double finbert_aggregate(std::span<const SentenceLabel> labels);
double finbert_aggregate(const Document& doc, std::span<const SentenceLabel> labels);

struct TextMeasures {
    LexiconScores lexicon;
    double gunning_fog = 0.0;
    double vader_polarity = 0.0;
    double finbert_sentiment = kMissing;  // missing when no sentence labels are available
};

inline const std::vector<std::string>& text_feature_names() {
    static const std::vector<std::string> names = {"lm_positive", "lm_negative",    "lm_uncertainty",
                                                   "lm_litigious", "gunning_fog", "vader_polarity",
                                                   "finbert_sentiment"};
    return names;
}

TextMeasures text_measures(const Document& doc, const Lexicon& lexicon,
                           std::span<const SentenceLabel> labels = {});

// ---------------------------------------------------------------------------
// Files

/// Reads `<dir>/<firm>/<year>.txt` for every firm directory.
std::vector<Document> load_documents(const std::filesystem::path& dir, const SplitOptions& options = {});

using SentenceLabelTable = std::map<std::pair<std::string, int>, std::vector<SentenceLabel>>;

/// Columns firm_id, year, sentence_index, label.
SentenceLabelTable load_sentence_labels(const std::filesystem::path& path);

struct LexiconFiles {
    std::filesystem::path categories;  // word,category
    std::filesystem::path valence;     // word,valence
    std::filesystem::path modifiers;   // word,value where value is "negate" or a booster multiplier
};

Lexicon load_lexicon(const LexiconFiles& files);

/// Appends the seven text measures; a record of year t uses the filing of year t-1.
Panel add_text_features(const Panel& panel, std::span<const Document> documents, const Lexicon& lexicon,
                        const SentenceLabelTable& labels);

}  // namespace distress
