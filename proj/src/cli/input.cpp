// SPDX-License-Identifier: Apache-2.0

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eot/cli.hpp"

namespace eot::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string where(const std::string& path, std::size_t row, std::size_t col) {
  return path + ": row " + std::to_string(row) + ", column " + std::to_string(col);
}

double parse_decimal(const std::string& token, const std::string& path, std::size_t row,
                     std::size_t col) {
  if (token.empty()) throw InputError(where(path, row, col) + ": empty field");
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || errno == ERANGE) {
    throw InputError(where(path, row, col) + ": cannot parse '" + token + "' as a number");
  }
  if (!std::isfinite(value)) throw InputError(where(path, row, col) + ": value is not finite");
  return value;
}

std::optional<Matrix> json_matrix(const nlohmann::json& doc, const char* key,
                                  const std::string& path) {
  if (!doc.contains(key)) return std::nullopt;
  const auto& rows = doc.at(key);
  const std::string field = path + ": \"" + key + "\"";
  if (!rows.is_array()) throw InputError(field + " must be an array of rows");
  std::vector<std::vector<double>> values;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].is_array()) {
      throw InputError(field + " row " + std::to_string(r + 1) + " is not an array");
    }
    std::vector<double> row;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const auto& cell = rows[r][c];
      if (!cell.is_number()) {
        throw InputError(field + " row " + std::to_string(r + 1) + ", column " +
                         std::to_string(c + 1) + ": not a number");
      }
      row.push_back(cell.get<double>());
    }
    if (!values.empty() && row.size() != values.front().size()) {
      throw InputError(field + " row " + std::to_string(r + 1) + " has " +
                       std::to_string(row.size()) + " entries, expected " +
                       std::to_string(values.front().size()));
    }
    values.push_back(std::move(row));
  }
  return Matrix::from_rows(values);
}

}  // namespace

Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream fields(line);
    std::string token;
    std::size_t col = 0;
    while (std::getline(fields, token, ',')) row.push_back(parse_decimal(trim(token), path, line_no, ++col));
    if (!line.empty() && trim(line).back() == ',') {
      throw InputError(where(path, line_no, col + 1) + ": empty field");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InputError(path + ": row " + std::to_string(line_no) + " has " +
                       std::to_string(row.size()) + " columns, expected " +
                       std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path + ": no data rows");
  return Matrix::from_rows(rows);
}

InputDocument read_json_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + ": invalid JSON (" + e.what() + ")");
  }
  if (!doc.is_object()) throw InputError(path + ": top-level value must be an object");
  return {json_matrix(doc, "mu", path), json_matrix(doc, "nu", path),
          json_matrix(doc, "cost", path)};
}

}  // namespace eot::cli
