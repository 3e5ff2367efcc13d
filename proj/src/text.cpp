#include "distress/text.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>

namespace distress {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_vowel(char c) { return std::string_view("aeiouy").find(c) != std::string_view::npos; }

std::string lower_alnum(std::string_view raw) {
    std::string out;
    for (char c : raw)
        if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text, const SplitOptions& options) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '.' && c != '?' && c != '!') continue;
        std::size_t j = i + 1;
        while (j < text.size() && (text[j] == '"' || text[j] == '\'' || text[j] == ')')) ++j;
        if (j >= text.size() || !is_space(text[j])) continue;
        std::size_t k = j;
        while (k < text.size() && is_space(text[k])) ++k;
        if (k >= text.size() || !is_upper(text[k])) continue;
        if (c == '.') {
            std::size_t w = i;
            while (w > start && !is_space(text[w - 1])) --w;
            const std::string word = lower_alnum(text.substr(w, i - w));
            if (std::find(options.abbreviations.begin(), options.abbreviations.end(), word) !=
                options.abbreviations.end())
                continue;
        }
        out.emplace_back(text.substr(start, j - start));
        start = k;
        i = k - 1;
    }
    if (start < text.size()) {
        std::string_view tail = text.substr(start);
        if (std::any_of(tail.begin(), tail.end(), [](char c) { return !is_space(c); })) out.emplace_back(tail);
    }
    return out;
}

Sentence tokenize(std::string_view sentence) {
    Sentence tokens;
    std::size_t i = 0;
    while (i < sentence.size()) {
        while (i < sentence.size() && is_space(sentence[i])) ++i;
        std::size_t j = i;
        while (j < sentence.size() && !is_space(sentence[j])) ++j;
        if (j > i) {
            std::string token = lower_alnum(sentence.substr(i, j - i));
            if (std::any_of(token.begin(), token.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); }))
                tokens.push_back(std::move(token));
        }
        i = j;
    }
    return tokens;
}

Document make_document(std::string firm_id, int year, std::vector<Sentence> sentences) {
    std::erase_if(sentences, [](const Sentence& s) { return s.empty(); });
    if (sentences.empty()) throw DataError("document " + firm_id + "/" + std::to_string(year) + " has no words");
    Document doc{std::move(firm_id), year, std::move(sentences), 0};
    for (const auto& s : doc.sentences) doc.total_words += s.size();
    return doc;
}

Document make_document(std::string firm_id, int year, std::string_view text, const SplitOptions& options) {
    std::vector<Sentence> sentences;
    for (const auto& s : split_sentences(text, options)) sentences.push_back(tokenize(s));
    return make_document(std::move(firm_id), year, std::move(sentences));
}

// ---------------------------------------------------------------------------

Lexicon Lexicon::builtin() {
    Lexicon lex;
    lex.categories[0] = {"gain", "gains", "improve", "improved", "strong", "success", "profitable", "achieve"};
    lex.categories[1] = {"loss", "losses", "decline", "default", "impairment", "adverse", "weak", "bankruptcy"};
    lex.categories[2] = {"may", "uncertain", "uncertainty", "approximately", "possible", "risk", "could"};
    lex.categories[3] = {"litigation", "lawsuit", "plaintiff", "court", "settlement", "legal"};
    lex.valence = {{"good", 0.6},   {"great", 0.8},  {"strong", 0.5}, {"gain", 0.4},  {"success", 0.7},
                   {"bad", -0.6},   {"loss", -0.5},  {"weak", -0.5},  {"decline", -0.4}, {"default", -0.7},
                   {"adverse", -0.6}, {"bankruptcy", -0.9}};
    lex.negators = {"not", "no", "never", "none", "nor", "without", "cannot", "dont", "doesnt", "isnt"};
    lex.boosters = {{"very", 1.3}, {"extremely", 1.5}, {"slightly", 0.7}, {"significantly", 1.3}};
    return lex;
}

void validate(const Lexicon& lexicon) {
    for (const auto& [w, v] : lexicon.valence)
        if (!(v >= -1.0 && v <= 1.0)) throw DataError("valence of '" + w + "' outside [-1, 1]");
    for (const auto& [w, m] : lexicon.boosters)
        if (!(m > 0.0) || !std::isfinite(m)) throw DataError("booster multiplier of '" + w + "' must be positive");
}

LexiconScores lexicon_counts(const Document& doc, const Lexicon& lexicon) {
    if (doc.total_words == 0) throw DataError("lexicon_counts: document has no words");
    std::array<std::size_t, 4> hits{};
    for (const auto& s : doc.sentences)
        for (const auto& token : s)
            for (std::size_t c = 0; c < 4; ++c)
                if (lexicon.categories[c].contains(token)) ++hits[c];
    static constexpr const char* names[] = {"positive", "negative", "uncertainty", "litigious"};
    static std::array<std::atomic<bool>, 4> warned{};
    for (std::size_t c = 0; c < 4; ++c)
        if (lexicon.categories[c].empty() && !warned[c].exchange(true))
            warn(std::string("lexicon category '") + names[c] + "' is empty; its score is 0");
    const double scale = 1000.0 / static_cast<double>(doc.total_words);
    return {scale * static_cast<double>(hits[0]), scale * static_cast<double>(hits[1]),
            scale * static_cast<double>(hits[2]), scale * static_cast<double>(hits[3])};
}

int count_syllables(std::string_view word) {
    std::string w;
    for (char c : word)
        if (std::isalpha(static_cast<unsigned char>(c))) w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (w.empty()) return 1;
    int groups = 0;
    bool in_vowel = false;
    for (char c : w) {
        const bool v = is_vowel(c);
        if (v && !in_vowel) ++groups;
        in_vowel = v;
    }
    const std::size_t n = w.size();
    if (groups > 1 && w[n - 1] == 'e' && !is_vowel(w[n - 2])) {
        const bool consonant_le = n >= 3 && w[n - 2] == 'l' && !is_vowel(w[n - 3]);
        if (!consonant_le) --groups;
    }
    return std::max(groups, 1);
}

double gunning_fog(const Document& doc) {
    if (doc.sentences.empty() || doc.total_words == 0) throw DataError("gunning_fog: empty document");
    std::size_t complex = 0;
    for (const auto& s : doc.sentences)
        for (const auto& token : s)
            if (count_syllables(token) >= 3) ++complex;
    const double words = static_cast<double>(doc.total_words);
    return 0.4 * (words / static_cast<double>(doc.sentences.size()) + 100.0 * static_cast<double>(complex) / words);
}

double sentence_polarity(const Sentence& tokens, const Lexicon& lexicon, const PolarityOptions& options) {
    double sum = 0.0;
    int negation_left = 0;
    double boost = 1.0;
    for (const auto& token : tokens) {
        if (lexicon.negators.contains(token)) {
            negation_left = options.negation_window;
            boost = 1.0;
            continue;
        }
        if (auto b = lexicon.boosters.find(token); b != lexicon.boosters.end()) {
            boost *= b->second;
            if (negation_left > 0) --negation_left;
            continue;
        }
        if (auto v = lexicon.valence.find(token); v != lexicon.valence.end()) {
            double value = v->second * boost;
            if (negation_left > 0) value = -value;
            sum += value;
        }
        boost = 1.0;
        if (negation_left > 0) --negation_left;
    }
    return sum / std::sqrt(sum * sum + options.alpha);
}

double mean_sentence_polarity(const Document& doc, const Lexicon& lexicon, const PolarityOptions& options) {
    if (doc.sentences.empty()) throw DataError("mean_sentence_polarity: empty document");
    double total = 0.0;
    for (const auto& s : doc.sentences) total += sentence_polarity(s, lexicon, options);
    return total / static_cast<double>(doc.sentences.size());
}

SentenceLabel parse_sentence_label(std::string_view text) {
    if (text == "positive") return SentenceLabel::positive;
    if (text == "negative") return SentenceLabel::negative;
    if (text == "neutral") return SentenceLabel::neutral;
    throw DataError("sentence label '" + std::string(text) + "' is not positive/negative/neutral");
}

double finbert_aggregate(std::span<const SentenceLabel> labels) {
    if (labels.empty()) throw DataError("finbert_aggregate: no sentences");
    long balance = 0;
    for (auto l : labels) {
        if (l == SentenceLabel::positive) ++balance;
        if (l == SentenceLabel::negative) --balance;
    }
    return static_cast<double>(balance) / static_cast<double>(labels.size());
}

double finbert_aggregate(const Document& doc, std::span<const SentenceLabel> labels) {
    if (labels.size() != doc.sentences.size())
        throw DataError("sentence labels for " + doc.firm_id + "/" + std::to_string(doc.year) + ": " +
                        std::to_string(labels.size()) + " labels for " + std::to_string(doc.sentences.size()) +
                        " sentences");
    return finbert_aggregate(labels);
}

TextMeasures text_measures(const Document& doc, const Lexicon& lexicon, std::span<const SentenceLabel> labels) {
    TextMeasures m;
    m.lexicon = lexicon_counts(doc, lexicon);
    m.gunning_fog = gunning_fog(doc);
    m.vader_polarity = mean_sentence_polarity(doc, lexicon);
    if (!labels.empty()) m.finbert_sentiment = finbert_aggregate(doc, labels);
    return m;
}

// ---------------------------------------------------------------------------

std::vector<Document> load_documents(const std::filesystem::path& dir, const SplitOptions& options) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw DataError("documents directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& firm : fs::directory_iterator(dir)) {
        if (!firm.is_directory()) continue;
        for (const auto& f : fs::directory_iterator(firm.path()))
            if (f.is_regular_file() && f.path().extension() == ".txt") files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Document> docs;
    for (const auto& f : files) {
        const int year = static_cast<int>(parse_int(f.stem().string(), f.string()));
        docs.push_back(make_document(f.parent_path().filename().string(), year, read_file(f), options));
    }
    return docs;
}

SentenceLabelTable load_sentence_labels(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t c_firm = t.column("firm_id");
    const std::size_t c_year = t.column("year");
    const std::size_t c_index = t.column("sentence_index");
    const std::size_t c_label = t.column("label");
    std::map<std::pair<std::string, int>, std::map<long long, SentenceLabel>> staged;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string ctx = path.string() + " row " + std::to_string(i + 1);
        const int year = static_cast<int>(parse_int(row[c_year], ctx));
        const long long index = parse_int(row[c_index], ctx);
        if (!staged[{row[c_firm], year}].emplace(index, parse_sentence_label(row[c_label])).second)
            throw DataError(ctx + ": duplicate sentence index");
    }
    SentenceLabelTable out;
    for (auto& [key, by_index] : staged) {
        auto& labels = out[key];
        long long expected = 0;
        for (const auto& [index, label] : by_index) {
            if (index != expected)
                throw DataError(path.string() + ": sentence indices for " + key.first + "/" +
                                std::to_string(key.second) + " are not contiguous from 0");
            labels.push_back(label);
            ++expected;
        }
    }
    return out;
}

Lexicon load_lexicon(const LexiconFiles& files) {
    Lexicon lex;
    if (!files.categories.empty()) {
        const CsvTable t = read_csv(files.categories);
        const std::size_t c_word = t.column("word"), c_cat = t.column("category");
        for (const auto& row : t.rows) {
            const std::string& cat = row[c_cat];
            std::size_t idx = 0;
            if (cat == "positive") idx = 0;
            else if (cat == "negative") idx = 1;
            else if (cat == "uncertainty") idx = 2;
            else if (cat == "litigious") idx = 3;
            else throw DataError(files.categories.string() + ": unknown category '" + cat + "'");
            lex.categories[idx].insert(lower_alnum(row[c_word]));
        }
    }
    if (!files.valence.empty()) {
        const CsvTable t = read_csv(files.valence);
        const std::size_t c_word = t.column("word"), c_val = t.column("valence");
        for (const auto& row : t.rows)
            lex.valence[lower_alnum(row[c_word])] = parse_double(row[c_val], files.valence.string());
    }
    if (!files.modifiers.empty()) {
        const CsvTable t = read_csv(files.modifiers);
        const std::size_t c_word = t.column("word"), c_val = t.column("value");
        for (const auto& row : t.rows) {
            const std::string word = lower_alnum(row[c_word]);
            if (row[c_val] == "negate") {
                lex.negators.insert(word);
            } else {
                lex.boosters[word] = parse_double(row[c_val], files.modifiers.string());
            }
        }
    }
    validate(lex);
    return lex;
}

Panel add_text_features(const Panel& panel, std::span<const Document> documents, const Lexicon& lexicon,
                        const SentenceLabelTable& labels) {
    std::map<std::pair<std::string, int>, const Document*> by_key;
    for (const auto& d : documents) by_key[{d.firm_id, d.year}] = &d;

    std::vector<std::pair<std::string, int>> keys;
    for (const auto& [key, doc] : by_key) keys.push_back(key);
    std::vector<TextMeasures> measures(keys.size());
    parallel_for(keys.size(), [&](std::size_t i) {
        const Document& d = *by_key.at(keys[i]);
        auto it = labels.find(keys[i]);
        measures[i] = text_measures(d, lexicon,
                                    it == labels.end() ? std::span<const SentenceLabel>{}
                                                       : std::span<const SentenceLabel>(it->second));
    });
    std::map<std::pair<std::string, int>, const TextMeasures*> measured;
    for (std::size_t i = 0; i < keys.size(); ++i) measured[keys[i]] = &measures[i];

    auto schema = panel.schema();
    for (const auto& name : text_feature_names()) schema.push_back({name, FeatureGroup::text});
    auto records = panel.records();
    for (auto& r : records) {
        auto it = measured.find({r.firm_id, r.year - 1});
        if (it == measured.end()) {
            r.features.insert(r.features.end(), text_feature_names().size(), kMissing);
            continue;
        }
        const TextMeasures& m = *it->second;
        r.features.insert(r.features.end(), {m.lexicon.positive, m.lexicon.negative, m.lexicon.uncertainty,
                                             m.lexicon.litigious, m.gunning_fog, m.vader_polarity,
                                             m.finbert_sentiment});
    }
    return Panel(std::move(schema), std::move(records));
}

}  // namespace distress
