#ifndef JUMPSIM_CSV_HPP
#define JUMPSIM_CSV_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "jumpsim/ensemble.hpp"

// Sweep tables for the plotting scripts. Every file starts with
// "# jumpsim-csv v1 kind=<kind>", then a header row, then numeric rows.
namespace jumpsim {

inline constexpr const char* kCsvVersion = "jumpsim-csv v1";

struct CsvTable {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_csv(std::ostream& os, const CsvTable& table);
CsvTable read_csv(std::istream& is);  // throws Error on a version or shape mismatch

CsvTable cat_sweep_table(const CatSweep& sweep);
CsvTable recurrence_table(std::span<const RecurrenceSample> samples);
CsvTable measurement_table(std::span<const int> d_env, std::span<const MeasurementReport> reports);

}  // namespace jumpsim

#endif  // JUMPSIM_CSV_HPP
