#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace distress {

// Error categories map one-to-one onto CLI exit codes (2, 3, 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ManifestError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// Explicit missing-value sentinel. Real data never contains NaN, so the
/// quiet NaN is distinct from every admissible value.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double x) { return std::isnan(x); }

/// Undefined-result marker for statistics such as AUC on one class.
inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

inline bool is_undefined(double x) { return std::isnan(x); }

void warn(std::string_view message);

// ---------------------------------------------------------------------------
// Parallelism. Work is split by index; callers write into per-index slots so
// results never depend on the worker count.

void set_thread_count(unsigned n);
unsigned thread_count();

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// SplitMix64 step, used to derive independent sub-seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Delimited text.

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column, or throws DataError naming the column.
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text, const std::string& source = "<memory>");
std::string to_csv(const CsvTable& table);

/// Shortest decimal text that round-trips the double exactly.
std::string format_double(double x);
double parse_double(std::string_view text, const std::string& context);
long long parse_int(std::string_view text, const std::string& context);

/// Write-to-temp-then-rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace distress
