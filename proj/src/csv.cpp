#include <privmcmc/csv.hpp>

#include <privmcmc/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace privmcmc {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t lineno, const std::string& what) {
  throw ConfigError(path + ":" + std::to_string(lineno) + ": " + what);
}

double parse_value(const std::string& field, const std::string& path, std::size_t lineno) {
  if (field == "NA") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) parse_fail(path, lineno, "trailing characters in '" + field + "'");
    return v;
  } catch (const std::invalid_argument&) {
    parse_fail(path, lineno, "not a number: '" + field + "'");
  } catch (const std::out_of_range&) {
    parse_fail(path, lineno, "number out of range: '" + field + "'");
  }
}

std::int64_t parse_index(const std::string& field, const std::string& path, std::size_t lineno,
                         const char* what) {
  const double v = parse_value(field, path, lineno);
  const double rounded = std::nearbyint(v);
  if (!std::isfinite(v) || v != rounded || rounded < 1) {
    parse_fail(path, lineno, std::string(what) + " must be a positive integer, got '" + field + "'");
  }
  return static_cast<std::int64_t>(rounded);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw IoError("cannot move " + tmp + " into place at " + path);
  }
}

std::string draws_to_csv(const DrawsMatrix& draws) {
  std::string out = "chain,iteration";
  for (const auto& name : draws.varnames) out += "," + name;
  out += '\n';
  for (std::size_t c = 0; c < draws.chains.size(); ++c) {
    const Eigen::MatrixXd& m = draws.chains[c];
    for (Eigen::Index it = 0; it < m.rows(); ++it) {
      out += std::to_string(c + 1);
      out += ',';
      out += std::to_string(it + 1);
      for (Eigen::Index v = 0; v < m.cols(); ++v) {
        out += ',';
        out += format_double(m(it, v));
      }
      out += '\n';
    }
  }
  return out;
}

void write_draws_csv(const std::string& path, const DrawsMatrix& draws) {
  write_file_atomic(path, draws_to_csv(draws));
}

DrawsMatrix read_draws_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open draws file: " + path);

  std::string line;
  if (!std::getline(in, line)) parse_fail(path, 1, "empty file, expected a header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() < 3 || header[0] != "chain" || header[1] != "iteration") {
    parse_fail(path, 1, "expected header 'chain,iteration,<variables...>'");
  }

  DrawsMatrix draws;
  draws.varnames.assign(header.begin() + 2, header.end());
  const std::size_t ncol = header.size();

  std::map<std::int64_t, std::vector<std::vector<double>>> by_chain;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != ncol) {
      parse_fail(path, lineno,
                 "expected " + std::to_string(ncol) + " fields, got " +
                     std::to_string(fields.size()));
    }
    const std::int64_t chain = parse_index(fields[0], path, lineno, "chain");
    parse_index(fields[1], path, lineno, "iteration");
    std::vector<double> row(ncol - 2);
    for (std::size_t v = 2; v < ncol; ++v) row[v - 2] = parse_value(fields[v], path, lineno);
    by_chain[chain].push_back(std::move(row));
  }
  if (by_chain.empty()) parse_fail(path, lineno, "no draws after the header");

  for (const auto& [chain, rows] : by_chain) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(ncol - 2));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t v = 0; v + 2 < ncol; ++v) {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(v)) = rows[r][v];
      }
    }
    draws.chains.push_back(std::move(m));
  }
  return draws;
}

std::string acceptance_to_csv(const std::vector<Eigen::VectorXd>& acceptance) {
  std::string out = "chain,iteration,mean_alpha\n";
  for (std::size_t c = 0; c < acceptance.size(); ++c) {
    for (Eigen::Index it = 0; it < acceptance[c].size(); ++it) {
      out += std::to_string(c + 1);
      out += ',';
      out += std::to_string(it + 1);
      out += ',';
      out += format_double(acceptance[c][it]);
      out += '\n';
    }
  }
  return out;
}

void write_acceptance_csv(const std::string& path,
                          const std::vector<Eigen::VectorXd>& acceptance) {
  write_file_atomic(path, acceptance_to_csv(acceptance));
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "variable,mean,median,sd,mad,q5,q95,rhat,ess_bulk,ess_tail\n";
  for (const auto& r : rows) {
    out += r.variable;
    for (const double v : {r.mean, r.median, r.sd, r.mad, r.q5, r.q95, r.rhat, r.ess_bulk,
                           r.ess_tail}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  write_file_atomic(path, summary_to_csv(rows));
}

std::string render_summary_table(const std::vector<SummaryRow>& rows) {
  const std::vector<std::string> header = {"variable", "mean",    "median",  "sd",
                                           "mad",      "q5",      "q95",     "rhat",
                                           "ess_bulk", "ess_tail"};
  std::vector<std::vector<std::string>> cells;
  cells.push_back(header);
  for (const auto& r : rows) {
    const auto fmt = [](double v) {
      if (std::isnan(v)) return std::string("NA");
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4g", v);
      return std::string(buf);
    };
    cells.push_back({r.variable, fmt(r.mean), fmt(r.median), fmt(r.sd), fmt(r.mad), fmt(r.q5),
                     fmt(r.q95), fmt(r.rhat), fmt(r.ess_bulk), fmt(r.ess_tail)});
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
  }
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out += "  ";
      // Left-align the variable name, right-align the numbers.
      if (j == 0) {
        out += row[j] + std::string(width[j] - row[j].size(), ' ');
      } else {
        out += std::string(width[j] - row[j].size(), ' ') + row[j];
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace privmcmc
