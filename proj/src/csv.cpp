#include "jumpsim/csv.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace jumpsim {

void write_csv(std::ostream& os, const CsvTable& table) {
  os << "# " << kCsvVersion << " kind=" << table.kind << "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) os << (c ? "," : "") << table.columns[c];
  os << "\n";
  const auto old = os.precision(17);
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw Error("csv row width differs from the header");
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << "\n";
  }
  os.precision(old);
}

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  const std::string prefix = std::string("# ") + kCsvVersion + " kind=";
  if (!std::getline(is, line) || line.rfind(prefix, 0) != 0) throw Error("not a " + std::string(kCsvVersion) + " file");
  t.kind = line.substr(prefix.size());
  if (!std::getline(is, line)) throw Error("csv header row missing");
  std::stringstream hs(line);
  for (std::string col; std::getline(hs, col, ',');) t.columns.push_back(col);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream rs(line);
    for (std::string cell; std::getline(rs, cell, ',');) row.push_back(std::stod(cell));
    if (row.size() != t.columns.size()) throw Error("csv row width differs from the header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable cat_sweep_table(const CatSweep& sweep) {
  CsvTable t{"cat_state", {"hbar2", "M", "M_se", "samples", "failures", "events", "t_rec", "n_qubits"}, {}};
  for (const auto& p : sweep.points) {
    t.rows.push_back({p.hbar2, p.spin.m, p.spin.m_se, double(p.spin.samples), double(p.failures), double(p.events),
                      p.t_rec, double(sweep.n_qubits)});
  }
  return t;
}

CsvTable recurrence_table(std::span<const RecurrenceSample> samples) {
  CsvTable t{"recurrence_scaling", {"nodes", "hbar2", "t_rec"}, {}};
  for (const auto& s : samples) t.rows.push_back({double(s.nodes), s.hbar2, s.t_rec});
  return t;
}

CsvTable measurement_table(std::span<const int> d_env, std::span<const MeasurementReport> reports) {
  if (d_env.size() != reports.size()) throw Error("measurement table needs one d_env per report");
  CsvTable t{"measurement", {"d_env", "f0", "f0_se", "switch_rate", "switch_rate_se", "failures", "undecided"}, {}};
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const double f0 = r.frequency.empty() ? kNaN : r.frequency[0];
    const double se = r.frequency_se.empty() ? kNaN : r.frequency_se[0];
    t.rows.push_back({double(d_env[i]), f0, se, r.switch_rate, r.switch_rate_se, double(r.failures),
                      double(r.undecided)});
  }
  return t;
}

}  // namespace jumpsim
