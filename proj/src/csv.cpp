#include "rispls/csv.hpp"

#include <cstdio>
#include <memory>

#include "rispls/common.hpp"

namespace rispls {

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw io_error("csv: cannot open " + path + " for writing");
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> guard(f, std::fclose);

  auto put_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) std::fputc(',', f);
      std::fwrite(row[i].data(), 1, row[i].size(), f);
    }
    std::fputc('\n', f);
  };
  put_row(header);
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw usage_error("csv: row width does not match header");
    put_row(row);
  }
  if (std::ferror(f)) throw io_error("csv: write failed for " + path);
}

}  // namespace rispls
