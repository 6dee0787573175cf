#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace rfsn::detail {

/// Reads a headed CSV of numbers. The header must name exactly `columns`, in
/// order; blank lines and lines starting with '#' are skipped.
std::vector<std::vector<double>> read_numeric_csv(std::istream& is, const std::vector<std::string>& columns,
                                                  const std::string& source);
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path,
                                                  const std::vector<std::string>& columns);

}  // namespace rfsn::detail
