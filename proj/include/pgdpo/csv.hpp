#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace pgdpo {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Shortest round-trip-safe text for a double ("%.17g").
std::string format_double(double v);

/// CSV file with a `# config_hash=... seed=...` comment line and a header row.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns,
              std::uint64_t config_hash, std::uint64_t seed);

    CsvWriter& operator<<(double v);
    CsvWriter& operator<<(long long v);
    CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
    CsvWriter& operator<<(std::size_t v) { return *this << static_cast<long long>(v); }
    CsvWriter& operator<<(const std::string& v);
    CsvWriter& operator<<(const char* v) { return *this << std::string(v); }
    /// Terminates the current row; throws if the cell count differs from the header.
    void end_row();

    std::size_t rows() const noexcept { return rows_; }
    const std::string& path() const noexcept { return path_; }

private:
    void cell(const std::string& text);

    std::string path_;
    std::ofstream os_;
    std::size_t columns_;
    std::size_t cells_ = 0;
    std::size_t rows_ = 0;
};

}  // namespace pgdpo
