#include "pbr/trace_io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pbr {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

Tick parse_tick(const std::string& s, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("trace line " + std::to_string(line_no) +
                           ": bad tick value '" + s + "'");
}

double parse_meters(const std::string& s, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("trace line " + std::to_string(line_no) +
                           ": bad truth value '" + s + "'");
}

}  // namespace

void write_trace_csv(std::ostream& out,
                     const std::vector<ExchangeRecord>& records) {
  bool with_truth = true;
  for (const auto& r : records) {
    if (!r.true_d_D_m || !r.true_d_A_m) with_truth = false;
  }
  out << (with_truth ? "n,t_D,s_A,s_D,t_A,d_D_true,d_A_true"
                     : "n,t_D,s_A,s_D,t_A")
      << '\n';
  char truth[64];
  for (const auto& r : records) {
    out << r.n << ',' << r.t_D << ',' << r.s_A << ',' << r.s_D << ','
        << r.t_A;
    if (with_truth) {
      std::snprintf(truth, sizeof(truth), ",%.6f,%.6f", *r.true_d_D_m,
                    *r.true_d_A_m);
      out << truth;
    }
    out << '\n';
  }
}

void write_trace_csv(const std::string& path,
                     const std::vector<ExchangeRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_trace_csv(out, records);
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

std::vector<ExchangeRecord> read_trace_csv(std::istream& in) {
  std::vector<ExchangeRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && !line.empty() && !std::isdigit(line[0]) &&
        line[0] != '-') {
      continue;  // header row
    }
    const auto f = split_fields(line);
    if (f.size() != 5 && f.size() != 7) {
      throw std::runtime_error("trace line " + std::to_string(line_no) +
                               ": expected 5 or 7 fields, got " +
                               std::to_string(f.size()));
    }
    ExchangeRecord r;
    r.n = parse_tick(f[0], line_no);
    r.t_D = parse_tick(f[1], line_no);
    r.s_A = parse_tick(f[2], line_no);
    r.s_D = parse_tick(f[3], line_no);
    r.t_A = parse_tick(f[4], line_no);
    if (f.size() == 7) {
      r.true_d_D_m = parse_meters(f[5], line_no);
      r.true_d_A_m = parse_meters(f[6], line_no);
    }
    if (!records.empty() && r.n <= records.back().n) {
      throw std::invalid_argument("trace rows must have strictly increasing n");
    }
    records.push_back(r);
  }
  return records;
}

std::vector<ExchangeRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  return read_trace_csv(in);
}

}  // namespace pbr
