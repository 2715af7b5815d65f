#pragma once

#include <string>
#include <vector>

namespace rispls {

// Formats a double with 17 significant digits so a round-trip parse
// recovers the exact value.
std::string csv_double(double v);

// UTF-8 CSV with a header row, '.' decimal separator, deterministic column
// order fixed by the caller. An empty row list yields a header-only file.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace rispls
