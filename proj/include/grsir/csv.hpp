#pragma once

#include "grsir/design.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace grsir {

struct NamedDataset {
  Dataset data;
  std::vector<std::string> predictor_names;
  std::string response_name;
};

/// Reads a comma-separated file with a header row. The column named
/// `response` is the response; every other column is a predictor in file
/// order.
NamedDataset read_dataset_csv(const std::string& path, const std::string& response);

/// Predictor-only table (no response column required). If `drop_column` is
/// non-empty and present in the header it is skipped.
struct NamedMatrix {
  MatrixXd values;
  std::vector<std::string> names;
};
NamedMatrix read_matrix_csv(const std::string& path, const std::string& drop_column = {});

void write_dataset_csv(std::ostream& out, const Dataset& data,
                       const std::vector<std::string>& predictor_names,
                       const std::string& response_name);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

}  // namespace grsir
