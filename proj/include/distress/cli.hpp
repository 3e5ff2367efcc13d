#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "distress/credit.hpp"
#include "distress/features.hpp"
#include "distress/models/model.hpp"
#include "distress/panel.hpp"
#include "distress/text.hpp"

namespace distress {

struct TextSource {
    std::filesystem::path documents;        // <dir>/<firm>/<year>.txt
    std::filesystem::path sentence_labels;  // optional
    std::optional<LexiconFiles> lexicon;    // builtin when absent
};

struct RawSource {
    std::filesystem::path dir;  // events.csv, statements.csv, equity.csv, firm_market.csv, macro.csv
    std::string missing_token = "NA";
    std::optional<TextSource> text;
};

struct SyntheticSource {
    SyntheticSpec spec;
    int periods_per_year = 0;  // > 0: generate raw tables and run the feature pipeline
};

struct Stage {
    std::string name;
    std::vector<FeatureGroup> groups;  // cumulative
};

struct ImportanceSettings {
    int repeats = 10;
    std::uint64_t seed = 0;
    int top_n = 25;
    bool on_validation = false;
    std::string stage;  // empty: last stage
};

struct CreditSettings {
    MarketConfig market;
    std::optional<std::filesystem::path> base_spreads;  // year,k
    double base_spread = 0.01;                          // used when no file is given
    std::vector<std::string> panels = {"full", "reduced"};
};

struct RunManifest {
    std::filesystem::path source;  // manifest file; relative paths resolve against its directory
    std::filesystem::path output_dir;
    std::uint64_t seed = 7;
    bool impute = true;
    bool winsorize = false;

    std::optional<std::filesystem::path> panel_manifest;
    std::optional<SyntheticSource> synthetic;
    std::optional<RawSource> raw;
    bool naive_dd = false;

    std::vector<Family> algorithms;
    std::vector<Stage> stages;
    std::optional<int> first_data_year, first_test_year, last_test_year;
    std::vector<std::string> windows = {"all", "dotcom", "gfc", "non_crisis"};
    std::map<Family, std::map<std::string, std::vector<double>>> grids;  // per-axis overrides
    ImportanceSettings importance;
    double pca_threshold = 0.95;
    CreditSettings credit;
};

/// Parses and fully validates a run manifest. Unknown keys at any level,
/// wrong types and out-of-range values raise ManifestError.
RunManifest parse_run_manifest(std::string_view text, const std::filesystem::path& source);
RunManifest read_run_manifest(const std::filesystem::path& path);

const std::vector<std::string>& command_names();

/// Output file name -> contents. Nothing is written until a command succeeds.
using Artifacts = std::map<std::string, std::string>;

Artifacts run_command(std::string_view command, const RunManifest& manifest);

/// --out, then $DISTRESS_BENCH_OUT, then the manifest's output_dir, then "out".
std::filesystem::path resolve_output_dir(const RunManifest& manifest, const std::optional<std::string>& flag);

/// Entry point: parses arguments, runs one command, maps errors to exit codes
/// (2 manifest, 3 data, 4 numerical) with an "error:<kind>:" prefix on `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace distress
