#ifndef FPOL_OUTPUT_HPP
#define FPOL_OUTPUT_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace fpol {

// Shortest round-trip decimal representation of a 64-bit float.
std::string format_double(double value);

// FNV-1a 64-bit fingerprint, printed as 16 hex digits.
std::uint64_t fnv1a64(const std::string& text);
std::string fnv1a64_hex(const std::string& text);

// CSV accumulator with fixed formatting and row order; every file starts
// with a comment header carrying the resolved-config hash.
class CsvWriter {
public:
    CsvWriter(std::string config_hash, std::vector<std::string> columns);

    void comment(const std::string& text);
    void begin_row();
    void add(double value);
    void add(int value);
    void add(const std::string& value);
    void end_row();

    const std::string& str();
    void write_file(const std::string& path);

private:
    std::string buffer_;
    std::string pending_;
    std::size_t columns_ = 0;
    std::size_t in_row_ = 0;
    bool header_done_ = false;
    std::vector<std::string> column_names_;
};

void write_text_file(const std::string& path, const std::string& content);

} // namespace fpol

#endif
