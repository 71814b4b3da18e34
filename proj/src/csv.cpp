#include "fwerlim/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <string>

#include "fwerlim/errors.hpp"

namespace fwerlim::csv {
namespace {

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

template <typename T>
T parse_number(const std::string& text, const char* column) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw UsageError(std::string("malformed CSV value in column ") + column + ": '" + text + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

void write_rows(std::ostream& out, std::span<const SweepRow> rows) {
  out << kHeader << '\n';
  for (const auto& row : rows) {
    out << quote(row.procedure) << ',' << to_string(row.metric) << ',' << row.n << ','
        << format_double(row.rho) << ',' << format_double(row.alpha) << ',' << row.n_false << ','
        << format_double(row.mu) << ',' << row.replicates << ',' << row.seed << ',';
    if (row.error.empty()) {
      const auto& r = row.result;
      out << format_double(r.estimate) << ',' << format_double(r.std_error) << ','
          << format_double(r.ci_low) << ',' << format_double(r.ci_high) << ',';
    } else {
      out << ",,,,";
    }
    if (row.reference_limit) {
      const auto [lo, hi] = *row.reference_limit;
      out << format_double(lo);
      if (hi != lo) out << ':' << format_double(hi);
    }
    out << ',';
    if (row.class_bound) out << format_double(*row.class_bound);
    out << ',' << quote(row.error) << '\n';
  }
}

std::vector<SweepRow> read_rows(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw UsageError("CSV input does not start with the expected header");
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_record(line);
    if (f.size() != 16) {
      throw UsageError("CSV record has " + std::to_string(f.size()) + " fields, expected 16");
    }
    SweepRow row;
    row.procedure = f[0];
    row.metric = parse_metric(f[1]);
    row.n = parse_number<std::size_t>(f[2], "n");
    row.rho = parse_number<double>(f[3], "rho");
    row.alpha = parse_number<double>(f[4], "alpha");
    row.n_false = parse_number<std::size_t>(f[5], "n_false");
    row.mu = parse_number<double>(f[6], "mu");
    row.replicates = parse_number<std::size_t>(f[7], "replicates");
    row.seed = parse_number<std::uint64_t>(f[8], "seed");
    row.error = f[15];
    row.result.metric = row.metric;
    row.result.replicates = row.replicates;
    row.result.seed = row.seed;
    if (row.error.empty()) {
      row.result.estimate = parse_number<double>(f[9], "estimate");
      row.result.std_error = parse_number<double>(f[10], "std_error");
      row.result.ci_low = parse_number<double>(f[11], "ci_low");
      row.result.ci_high = parse_number<double>(f[12], "ci_high");
    }
    if (!f[13].empty()) {
      const auto colon = f[13].find(':');
      const double lo = parse_number<double>(f[13].substr(0, colon), "reference_limit");
      const double hi = colon == std::string::npos
                            ? lo
                            : parse_number<double>(f[13].substr(colon + 1), "reference_limit");
      row.reference_limit = std::pair{lo, hi};
    }
    if (!f[14].empty()) row.class_bound = parse_number<double>(f[14], "class_bound");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace fwerlim::csv
