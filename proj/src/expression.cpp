#include "kfp/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kfp/error.hpp"

namespace kfp {

struct Expression::Node {
  enum class Kind { Number, VarX, VarV, Add, Sub, Mul, Div, Pow, Neg, Exp, Sin, Cos, Sqrt, Abs };
  Kind kind = Kind::Number;
  double value = 0.0;
  int index = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr leaf_number(double value) {
  auto node = std::make_shared<Node>();
  node->kind = Node::Kind::Number;
  node->value = value;
  return node;
}

NodePtr make_node(Node::Kind kind, NodePtr lhs, NodePtr rhs = nullptr) {
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->lhs = std::move(lhs);
  node->rhs = std::move(rhs);
  return node;
}

double eval(const Node& node, const PhasePoint& p) {
  switch (node.kind) {
    case Node::Kind::Number: return node.value;
    case Node::Kind::VarX: return p.x[static_cast<std::size_t>(node.index)];
    case Node::Kind::VarV: return p.v[static_cast<std::size_t>(node.index)];
    case Node::Kind::Add: return eval(*node.lhs, p) + eval(*node.rhs, p);
    case Node::Kind::Sub: return eval(*node.lhs, p) - eval(*node.rhs, p);
    case Node::Kind::Mul: return eval(*node.lhs, p) * eval(*node.rhs, p);
    case Node::Kind::Div: return eval(*node.lhs, p) / eval(*node.rhs, p);
    case Node::Kind::Pow: return std::pow(eval(*node.lhs, p), eval(*node.rhs, p));
    case Node::Kind::Neg: return -eval(*node.lhs, p);
    case Node::Kind::Exp: return std::exp(eval(*node.lhs, p));
    case Node::Kind::Sin: return std::sin(eval(*node.lhs, p));
    case Node::Kind::Cos: return std::cos(eval(*node.lhs, p));
    case Node::Kind::Sqrt: return std::sqrt(eval(*node.lhs, p));
    case Node::Kind::Abs: return std::abs(eval(*node.lhs, p));
  }
  return 0.0;
}

bool depends_on_point(const Node& node) {
  if (node.kind == Node::Kind::VarX || node.kind == Node::Kind::VarV) return true;
  if (node.lhs && depends_on_point(*node.lhs)) return true;
  return node.rhs && depends_on_point(*node.rhs);
}

class Parser {
 public:
  Parser(const std::string& text, int n) : text_(text), n_(n) {}

  NodePtr parse() {
    NodePtr root = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected character");
    return fold(root);
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    std::ostringstream os;
    os << why << " at position " << pos_ << " in expression \"" << text_ << "\"";
    throw ConfigError(os.str());
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = make_node(Node::Kind::Add, lhs, parse_product());
      } else if (accept('-')) {
        lhs = make_node(Node::Kind::Sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_product() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_node(Node::Kind::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make_node(Node::Kind::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return make_node(Node::Kind::Neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) return make_node(Node::Kind::Pow, base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    fail("unexpected character");
  }

  NodePtr parse_number() {
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return leaf_number(value);
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string name = text_.substr(start, pos_ - start);

    if (name == "pi") return leaf_number(std::numbers::pi);
    if (name == "exp" || name == "sin" || name == "cos" || name == "sqrt" || name == "abs") {
      if (!accept('(')) fail("expected '(' after function " + name);
      NodePtr arg = parse_sum();
      if (!accept(')')) fail("expected ')'");
      Node::Kind kind = Node::Kind::Exp;
      if (name == "sin") kind = Node::Kind::Sin;
      if (name == "cos") kind = Node::Kind::Cos;
      if (name == "sqrt") kind = Node::Kind::Sqrt;
      if (name == "abs") kind = Node::Kind::Abs;
      return make_node(kind, arg);
    }
    if ((name == "x" || name == "v") && n_ == 1) return variable(name[0], 0);
    if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'v')) {
      const std::string digits = name.substr(1);
      bool numeric = !digits.empty();
      for (char d : digits) numeric = numeric && std::isdigit(static_cast<unsigned char>(d));
      if (numeric) {
        const int axis = std::stoi(digits);
        if (axis >= 1 && axis <= n_) return variable(name[0], axis - 1);
      }
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }

  NodePtr variable(char which, int index) {
    auto node = std::make_shared<Node>();
    node->kind = which == 'x' ? Node::Kind::VarX : Node::Kind::VarV;
    node->index = index;
    return node;
  }

  NodePtr fold(const NodePtr& node) {
    if (!depends_on_point(*node)) return leaf_number(eval(*node, PhasePoint{}));
    return node;
  }

  const std::string& text_;
  int n_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, int n) {
  if (n < 1 || n > kMaxDim) throw ConfigError("expression dimension must be 1 or 2");
  Parser parser(text, n);
  return Expression(text, parser.parse());
}

double Expression::operator()(const PhasePoint& p) const { return eval(*root_, p); }

bool Expression::is_constant() const { return root_->kind == Node::Kind::Number; }

}  // namespace kfp
