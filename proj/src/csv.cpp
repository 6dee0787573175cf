#include "rfsn/detail/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "rfsn/error.hpp"

namespace rfsn::detail {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t");
    const auto e = field.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> read_numeric_csv(std::istream& is, const std::vector<std::string>& columns,
                                                  const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (!header_seen) {
      if (fields != columns) throw ConfigError(where + ": unexpected header");
      header_seen = true;
      continue;
    }
    if (fields.size() != columns.size()) throw ConfigError(where + ": wrong number of columns");
    std::vector<double> row;
    for (const auto& f : fields) {
      double v = 0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) throw ConfigError(where + ": not a number: '" + f + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw ConfigError(source + ": missing header");
  return rows;
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path,
                                                  const std::vector<std::string>& columns) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path.string());
  return read_numeric_csv(is, columns, path.string());
}

}  // namespace rfsn::detail
