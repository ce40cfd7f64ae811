#pragma once

#include <functional>
#include <string>

namespace kslab {

/// Compiles an arithmetic expression in the single variable `v`.
///
/// Grammar: numbers, `v`, `pi`, `+ - * / ^` (right-associative power),
/// parentheses, unary minus, and the functions exp, log, sqrt, abs, pow(a, b).
/// Throws std::invalid_argument on a syntax error.
std::function<double(double)> compile_expression(const std::string& source);

}  // namespace kslab
