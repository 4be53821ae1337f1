#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace mvmc::cli {

// Fixed-format double so identical runs serialize byte-identically.
inline std::string csv_number(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.10g", value);
    return buffer;
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void comment(const std::string& text) { out_ << "# " << text << "\n"; }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << "\n";
    }

private:
    std::ostream& out_;
};

}  // namespace mvmc::cli
