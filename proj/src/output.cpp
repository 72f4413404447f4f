#include "fpol/output.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace fpol {

std::string format_double(double value) {
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[32];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::string fnv1a64_hex(const std::string& text) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(text);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

CsvWriter::CsvWriter(std::string config_hash, std::vector<std::string> columns)
    : columns_(columns.size()), column_names_(std::move(columns)) {
    buffer_ = "# config=" + config_hash + "\n";
}

void CsvWriter::comment(const std::string& text) {
    if (header_done_)
        throw std::logic_error("CsvWriter: comments must precede data rows");
    buffer_ += "# " + text + "\n";
}

void CsvWriter::begin_row() {
    if (!header_done_) {
        for (std::size_t i = 0; i < column_names_.size(); ++i) {
            if (i)
                buffer_ += ',';
            buffer_ += column_names_[i];
        }
        buffer_ += '\n';
        header_done_ = true;
    }
    pending_.clear();
    in_row_ = 0;
}

void CsvWriter::add(double value) { add(format_double(value)); }

void CsvWriter::add(int value) { add(std::to_string(value)); }

void CsvWriter::add(const std::string& value) {
    if (in_row_)
        pending_ += ',';
    pending_ += value;
    ++in_row_;
}

void CsvWriter::end_row() {
    if (in_row_ != columns_)
        throw std::logic_error("CsvWriter: row has " + std::to_string(in_row_)
                               + " fields, expected " + std::to_string(columns_));
    buffer_ += pending_;
    buffer_ += '\n';
}

const std::string& CsvWriter::str() {
    if (!header_done_)
        begin_row(); // emit the header even for empty tables
    return buffer_;
}

void CsvWriter::write_file(const std::string& path) {
    write_text_file(path, str());
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open output file: " + path);
    out << content;
    if (!out)
        throw std::runtime_error("failed writing output file: " + path);
}

} // namespace fpol
