// Text front-end for exponential polynomials and linear ODEs.
//
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*          ("/" only by constants)
//   factor := ("-"|"+")? atom ("^" uint)?
//   atom   := rational | rational "i" | "i" | "z" | "(" expr ")"
//           | func "(" expr ")"
//   func   := "exp" | "sin" | "cos" | "sinh" | "cosh"
//
// Equations additionally accept the unknown as f, f', f'', ... or f^(k),
// optionally followed by "= 0".
#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>

#include "crg/exppoly.hpp"

namespace crg {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t position)
        : std::runtime_error(message + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// Parses the DSL into canonical form; sin/cos/sinh/cosh are expanded into
/// exponentials.  Throws ParseError.
ExpPoly parse_exppoly(const std::string& text);

/// Coefficients of sum_k c_k f^(k), indexed by derivative order.  Throws
/// ParseError on nonlinear or inhomogeneous input.
std::map<unsigned, ExpPoly> parse_linear_form(const std::string& text);

}  // namespace crg
