#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pbr/simulate.hpp"

namespace pbr {

// Trace CSV: header `n,t_D,s_A,s_D,t_A,d_D_true,d_A_true`, tick columns as
// decimal integers, truth columns in meters with six fractional digits.
// Rows lost to drops are omitted entirely, leaving a gap in n. Files
// without truth carry only the first five columns.
void write_trace_csv(std::ostream& out,
                     const std::vector<ExchangeRecord>& records);
void write_trace_csv(const std::string& path,
                     const std::vector<ExchangeRecord>& records);

// Accepts files with or without the header row; malformed rows are
// reported with their line number.
std::vector<ExchangeRecord> read_trace_csv(std::istream& in);
std::vector<ExchangeRecord> read_trace_csv(const std::string& path);

}  // namespace pbr
