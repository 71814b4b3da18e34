#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fwerlim/estimators.hpp"

namespace fwerlim::csv {

/// Column order of estimate/sweep output.
inline constexpr std::string_view kHeader =
    "procedure,metric,n,rho,alpha,n_false,mu,replicates,seed,estimate,std_error,ci_low,ci_high,"
    "reference_limit,class_bound,error";

/// Shortest decimal that parses back to exactly `value` ('.' separator, at
/// most 17 significant digits, no locale).
std::string format_double(double value);

void write_rows(std::ostream& out, std::span<const SweepRow> rows);
/// Parses output of write_rows (header included); throws UsageError on malformed input.
std::vector<SweepRow> read_rows(std::istream& in);

}  // namespace fwerlim::csv
