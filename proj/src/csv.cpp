#include "pgdpo/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace pgdpo {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns,
                     std::uint64_t config_hash, std::uint64_t seed)
    : path_(path), os_(path, std::ios::binary), columns_(columns.size()) {
    if (!os_) throw std::runtime_error("cannot open '" + path + "' for writing");
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
    os_ << "# config_hash=" << hash << " seed=" << seed << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
    os_ << '\n';
}

void CsvWriter::cell(const std::string& text) {
    if (cells_ == columns_) throw std::logic_error("too many cells in CSV row of " + path_);
    os_ << (cells_ ? "," : "") << text;
    ++cells_;
}

CsvWriter& CsvWriter::operator<<(double v) {
    cell(format_double(v));
    return *this;
}

CsvWriter& CsvWriter::operator<<(long long v) {
    cell(std::to_string(v));
    return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
    cell(v);
    return *this;
}

void CsvWriter::end_row() {
    if (cells_ != columns_) throw std::logic_error("incomplete CSV row in " + path_);
    os_ << '\n';
    cells_ = 0;
    ++rows_;
    if (!os_) throw std::runtime_error("write failed for " + path_);
}

}  // namespace pgdpo
