#pragma once

#include <memory>
#include <string>

#include "kfp/geometry.hpp"

namespace kfp {

/// Compiled closed-form expression over phase-space coordinates.
///
/// Grammar: identifiers x1..xn, v1..vn (x and v are accepted when n = 1), the
/// constant pi, decimal literals, operators + - * / ^ (right associative) with
/// unary sign, and the functions exp, sin, cos, sqrt, abs. Whitespace is ignored.
class Expression {
 public:
  /// Throws ConfigError with the offending position on malformed input.
  static Expression parse(const std::string& text, int n);

  double operator()(const PhasePoint& p) const;

  bool is_constant() const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  Expression(std::string text, std::shared_ptr<const Node> root)
      : text_(std::move(text)), root_(std::move(root)) {}

  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace kfp
