#pragma once

#include <string>
#include <vector>

#include "oed/dynamics.hpp"

namespace oed {

/// Parses a problem file: `key = value` lines grouped in the sections
/// [model] [control] [sensors] [prior] [budget]; `#` starts a comment and
/// lists are whitespace separated. Throws ParseError naming the offending
/// key and line for unknown, duplicate, missing or invalid entries.
ProblemSetup parse_problem_text(const std::string& text,
                                const std::string& origin = "<input>");
ProblemSetup parse_problem(const std::string& path);

/// Names of the problem files compiled into the library (file stems).
std::vector<std::string> bundled_problem_names();
/// Text of a bundled problem file; throws ConfigurationError if unknown.
std::string bundled_problem_text(const std::string& name);

/// Resolves `ref` as a readable file path first, then as a bundled name
/// (with or without the `.spec` suffix).
ProblemSetup load_problem(const std::string& ref);

}  // namespace oed
