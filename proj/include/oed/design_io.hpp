#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "oed/solve.hpp"

namespace oed {

/// Provenance of an output file: the command line and the seed.
struct FileHeader {
  std::vector<std::string> argv;
  std::uint64_t seed = 0;
};

void write_header(const FileHeader& header, std::ostream& out);

/// Text format:
///   controls <N_u> <n_u>     then one row of values per interval
///   activations <count>      then one "t sensor" line each, sensor 1-based
void write_design(const DiscreteDesign& design, const FileHeader& header,
                  std::ostream& out);
/// Parses a design file and checks it against `spec`; activation cells are
/// recovered from the midpoint times.
DiscreteDesign read_design(std::istream& in, const ProblemSpec& spec,
                           const std::string& origin = "<design>");

///   controls <N_u> <n_u>     rows as above
///   weights <N_w> <n_exp>    one row per cell
void write_relaxed(const RelaxedDesign& design, const FileHeader& header,
                   std::ostream& out);
RelaxedDesign read_relaxed(std::istream& in, const ProblemSpec& spec,
                           const std::string& origin = "<relaxed>");

/// Optimization log; the only time-dependent line starts with "# started ".
void write_log(const RoundedDesign& result, Criterion criterion,
               const FileHeader& header, const std::string& timestamp,
               std::ostream& out);

/// Current UTC time as ISO 8601.
std::string iso_timestamp();

/// Numbers as printed in every output file: 17 significant digits.
std::string format_number(double v);

}  // namespace oed
