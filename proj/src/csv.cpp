#include "grsir/csv.hpp"

#include "grsir/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

namespace grsir {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    fields.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return fields;
}

double parse_number(const std::string& field, const std::string& path, std::size_t line_no) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::Parse, path + ":" + std::to_string(line_no) + ": cannot parse '" +
                                      field + "' as a number");
  }
  return value;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  Table table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (table.header.empty()) {
      if (line_no == 1 && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorCode::Parse, path + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(table.header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_number(f, path, line_no));
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw Error(ErrorCode::Parse, "'" + path + "' has no header row");
  return table;
}

}  // namespace

NamedMatrix read_matrix_csv(const std::string& path, const std::string& drop_column) {
  const Table table = read_table(path);
  std::vector<std::size_t> keep;
  NamedMatrix out;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (!drop_column.empty() && table.header[j] == drop_column) continue;
    keep.push_back(j);
    out.names.push_back(table.header[j]);
  }
  out.values.resize(static_cast<Index>(table.rows.size()), static_cast<Index>(keep.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t k = 0; k < keep.size(); ++k) {
      out.values(static_cast<Index>(i), static_cast<Index>(k)) = table.rows[i][keep[k]];
    }
  }
  return out;
}

NamedDataset read_dataset_csv(const std::string& path, const std::string& response) {
  const Table table = read_table(path);
  const auto it = std::find(table.header.begin(), table.header.end(), response);
  if (it == table.header.end()) {
    throw Error(ErrorCode::InvalidArgument,
                "response column '" + response + "' not found in '" + path + "'");
  }
  const auto response_col = static_cast<std::size_t>(it - table.header.begin());
  const auto n = static_cast<Index>(table.rows.size());
  const auto p = static_cast<Index>(table.header.size()) - 1;

  MatrixXd x(n, p);
  VectorXd y(n);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j != response_col) names.push_back(table.header[j]);
  }
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    Index col = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == response_col) {
        y(i) = row[j];
      } else {
        x(i, col++) = row[j];
      }
    }
  }
  return NamedDataset{Dataset(std::move(x), std::move(y)), std::move(names), response};
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_dataset_csv(std::ostream& out, const Dataset& data,
                       const std::vector<std::string>& predictor_names,
                       const std::string& response_name) {
  for (const auto& name : predictor_names) out << name << ',';
  out << response_name << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.p(); ++j) out << format_double(data.x()(i, j)) << ',';
    out << format_double(data.y()(i)) << '\n';
  }
}

}  // namespace grsir
