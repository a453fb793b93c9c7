#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ibscale/error.hpp"

namespace ibscale {

// Respondents x items table of ordinal answers in {1..levelCount}.
class ResponseMatrix {
 public:
  ResponseMatrix() = default;

  ResponseMatrix(std::vector<std::string> itemIds, std::vector<int> values,
                 int levelCount = 7)
      : itemIds_(std::move(itemIds)), values_(std::move(values)), levels_(levelCount) {
    if (levels_ < 1) fail(ErrorCode::InvalidConfig, "levelCount must be positive");
    if (itemIds_.empty()) fail(ErrorCode::EmptyInput, "response matrix has no items");
    std::set<std::string> seen;
    for (const auto& id : itemIds_) {
      if (id.empty()) fail(ErrorCode::DomainError, "empty item id");
      if (!seen.insert(id).second) fail(ErrorCode::DomainError, "duplicate item id '" + id + "'");
    }
    if (values_.size() % itemIds_.size() != 0) {
      fail(ErrorCode::DimensionError, "values are not a whole number of respondent rows");
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
      int v = values_[k];
      if (v < 1 || v > levels_) {
        fail(ErrorCode::InvalidLevel,
             "level " + std::to_string(v) + " outside 1.." + std::to_string(levels_) +
                 " at respondent " + std::to_string(k / itemIds_.size()) + ", item '" +
                 itemIds_[k % itemIds_.size()] + "'");
      }
    }
  }

  static ResponseMatrix from_rows(std::vector<std::string> itemIds,
                                  const std::vector<std::vector<int>>& rows,
                                  int levelCount = 7) {
    std::vector<int> flat;
    for (const auto& r : rows) {
      if (r.size() != itemIds.size()) {
        fail(ErrorCode::DimensionError, "respondent row length differs from item count");
      }
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return ResponseMatrix(std::move(itemIds), std::move(flat), levelCount);
  }

  const std::vector<std::string>& item_ids() const noexcept { return itemIds_; }
  std::size_t items() const noexcept { return itemIds_.size(); }
  std::size_t respondents() const noexcept {
    return itemIds_.empty() ? 0 : values_.size() / itemIds_.size();
  }
  int level_count() const noexcept { return levels_; }
  int operator()(std::size_t respondent, std::size_t item) const {
    return values_[respondent * itemIds_.size() + item];
  }
  const std::vector<int>& values() const noexcept { return values_; }

  std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < itemIds_.size(); ++i)
      if (itemIds_[i] == id) return i;
    fail(ErrorCode::DomainError, "unknown item id '" + id + "'");
  }

  // Column of item as a real vector (one entry per respondent).
  std::vector<double> item_column(std::size_t item) const {
    std::vector<double> col(respondents());
    for (std::size_t r = 0; r < col.size(); ++r) col[r] = (*this)(r, item);
    return col;
  }

 private:
  std::vector<std::string> itemIds_;
  std::vector<int> values_;
  int levels_ = 7;
};

struct CsvOptions {
  char delimiter = ',';
  int levelCount = 7;
};

struct IngestResult {
  ResponseMatrix responses;
  std::size_t droppedRows = 0;
  std::vector<std::size_t> droppedLines;  // 1-based file line numbers
};

namespace detail {

inline std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, delim)) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == delim) cells.emplace_back();
  return cells;
}

}  // namespace detail

// Header row holds item labels, each following row one respondent. A blank
// cell is a missing answer; rows with any missing answer are dropped.
inline IngestResult read_responses_csv(std::istream& in, const CsvOptions& opt = {}) {
  std::string line;
  std::size_t lineNo = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!detail::trim(line).empty()) {
      header = detail::split_line(line, opt.delimiter);
      break;
    }
  }
  if (header.empty()) fail(ErrorCode::EmptyInput, "CSV has no header row");

  IngestResult result;
  std::vector<int> values;
  while (std::getline(in, line)) {
    ++lineNo;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_line(line, opt.delimiter);
    if (cells.size() != header.size()) {
      fail(ErrorCode::ParseError, "line " + std::to_string(lineNo) + ": expected " +
                                      std::to_string(header.size()) + " cells, found " +
                                      std::to_string(cells.size()));
    }
    bool missing = false;
    std::vector<int> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].empty()) {
        missing = true;
        continue;
      }
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(cells[c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cells[c].size()) {
        fail(ErrorCode::ParseError, "line " + std::to_string(lineNo) + ", column " +
                                        std::to_string(c + 1) + ": '" + cells[c] +
                                        "' is not an integer");
      }
      if (v < 1 || v > opt.levelCount) {
        fail(ErrorCode::InvalidLevel, "line " + std::to_string(lineNo) + ", column " +
                                          std::to_string(c + 1) + ": level " +
                                          std::to_string(v) + " outside 1.." +
                                          std::to_string(opt.levelCount));
      }
      row[c] = v;
    }
    if (missing) {
      ++result.droppedRows;
      result.droppedLines.push_back(lineNo);
      continue;
    }
    values.insert(values.end(), row.begin(), row.end());
  }
  result.responses = ResponseMatrix(std::move(header), std::move(values), opt.levelCount);
  return result;
}

inline IngestResult read_responses_csv(const std::string& path, const CsvOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  return read_responses_csv(in, opt);
}

inline void write_responses_csv(std::ostream& out, const ResponseMatrix& m, char delim = ',') {
  const auto& ids = m.item_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? std::string(1, delim) : "") << ids[i];
  out << '\n';
  for (std::size_t r = 0; r < m.respondents(); ++r) {
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? std::string(1, delim) : "") << m(r, i);
    out << '\n';
  }
}

}  // namespace ibscale
