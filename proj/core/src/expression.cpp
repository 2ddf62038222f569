#include "morsenorm/expression.hpp"

#include <cctype>
#include <algorithm>
#include <cstdio>
#include <memory>
#include <sstream>

namespace morsenorm {
namespace {

struct Node {
  enum class Kind { Number, Variable, Add, Sub, Mul, Div, Neg, Pow };
  Kind kind;
  std::size_t pos = 0;
  Rational value;
  std::size_t var = 0;
  int exponent = 0;
  std::unique_ptr<Node> lhs, rhs;
};

using NodePtr = std::unique_ptr<Node>;

NodePtr make_node(Node::Kind k, std::size_t pos) {
  auto n = std::make_unique<Node>();
  n->kind = k;
  n->pos = pos;
  return n;
}

class Parser {
 public:
  Parser(std::string_view text, std::size_t n) : s_(text), n_(n) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (i_ < s_.size()) fail("unexpected input", {"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"});
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, std::vector<std::string> expected) const {
    throw ParseError(msg, std::min(i_, s_.size()), std::move(expected));
  }

  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  bool accept(char c) {
    skip_ws();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      skip_ws();
      const std::size_t pos = i_;
      Node::Kind k;
      if (accept('+')) {
        k = Node::Kind::Add;
      } else if (accept('-')) {
        k = Node::Kind::Sub;
      } else {
        return lhs;
      }
      NodePtr node = make_node(k, pos);
      node->lhs = std::move(lhs);
      node->rhs = term();
      lhs = std::move(node);
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      skip_ws();
      const std::size_t pos = i_;
      Node::Kind k;
      if (accept('*')) {
        k = Node::Kind::Mul;
      } else if (accept('/')) {
        k = Node::Kind::Div;
      } else {
        return lhs;
      }
      NodePtr node = make_node(k, pos);
      node->lhs = std::move(lhs);
      node->rhs = factor();
      lhs = std::move(node);
    }
  }

  NodePtr factor() {
    skip_ws();
    const std::size_t pos = i_;
    if (++depth_ > kMaxDepth) fail("expression nested too deeply", {});
    struct Leave {
      int& d;
      ~Leave() { --d; }
    } leave{depth_};
    if (accept('-')) {
      NodePtr node = make_node(Node::Kind::Neg, pos);
      node->lhs = factor();
      return node;
    }
    if (accept('+')) return factor();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    skip_ws();
    const std::size_t pos = i_;
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t start = i_;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    if (start == i_) fail("exponent must be a nonnegative integer", {"integer"});
    if (i_ < s_.size() && s_[i_] == '.') fail("exponent must be a nonnegative integer", {"integer"});
    const std::string digits(s_.substr(start, i_ - start));
    if (digits.size() > 4 || std::stoi(digits) > kMaxExponent) {
      i_ = start;
      fail("exponent too large", {"integer <= " + std::to_string(kMaxExponent)});
    }
    NodePtr node = make_node(Node::Kind::Pow, pos);
    node->lhs = std::move(base);
    node->exponent = std::stoi(digits);
    return node;
  }

  NodePtr primary() {
    skip_ws();
    const std::size_t pos = i_;
    if (i_ >= s_.size()) fail("unexpected end of input", {"number", "variable", "'('"});
    const char c = s_[i_];
    if (c == '(') {
      ++i_;
      NodePtr e = expr();
      if (!accept(')')) fail("unbalanced parenthesis", {"')'"});
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      const std::size_t start = i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      if (i_ < s_.size() && s_[i_] == '.') {
        ++i_;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      }
      NodePtr node = make_node(Node::Kind::Number, pos);
      node->value = rational_from_decimal(std::string(s_.substr(start, i_ - start)));
      return node;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = i_;
      while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
      const std::string name(s_.substr(start, i_ - start));
      bool ok = name.size() >= 2 && name[0] == 'x' && name[1] != '0' && name.size() <= 6;
      for (std::size_t k = 1; ok && k < name.size(); ++k) ok = std::isdigit(static_cast<unsigned char>(name[k]));
      const std::size_t index = ok ? std::stoul(name.substr(1)) : 0;
      if (!ok || index < 1 || index > n_) {
        i_ = start;
        fail("unknown variable '" + name + "'", {"x1..x" + std::to_string(n_)});
      }
      NodePtr node = make_node(Node::Kind::Variable, pos);
      node->var = index - 1;
      return node;
    }
    fail(std::string("unexpected character '") + c + "'", {"number", "variable", "'('"});
  }

  static constexpr int kMaxDepth = 200;

  std::string_view s_;
  std::size_t n_;
  std::size_t i_ = 0;
  int depth_ = 0;
};

constexpr long kDegreeCap = 1L << 30;

long degree_bound(const Node& node) {
  switch (node.kind) {
    case Node::Kind::Number: return 0;
    case Node::Kind::Variable: return 1;
    case Node::Kind::Add:
    case Node::Kind::Sub: return std::max(degree_bound(*node.lhs), degree_bound(*node.rhs));
    case Node::Kind::Mul: return std::min(kDegreeCap, degree_bound(*node.lhs) + degree_bound(*node.rhs));
    case Node::Kind::Div:
    case Node::Kind::Neg: return degree_bound(*node.lhs);
    case Node::Kind::Pow: return std::min(kDegreeCap, degree_bound(*node.lhs) * node.exponent);
  }
  return 0;
}

Jet<Rational> evaluate(const Node& node, std::size_t n, int L, bool& dropped) {
  switch (node.kind) {
    case Node::Kind::Number: return Jet<Rational>::constant(n, L, node.value);
    case Node::Kind::Variable: {
      if (L < 1) {
        dropped = true;
        return Jet<Rational>(n, L);
      }
      return Jet<Rational>::variable(n, L, node.var);
    }
    case Node::Kind::Add: return evaluate(*node.lhs, n, L, dropped) + evaluate(*node.rhs, n, L, dropped);
    case Node::Kind::Sub: return evaluate(*node.lhs, n, L, dropped) - evaluate(*node.rhs, n, L, dropped);
    case Node::Kind::Neg: return -evaluate(*node.lhs, n, L, dropped);
    case Node::Kind::Mul:
      return multiply(evaluate(*node.lhs, n, L, dropped), evaluate(*node.rhs, n, L, dropped), &dropped);
    case Node::Kind::Div: {
      if (degree_bound(*node.rhs) != 0) throw ParseError("divisor must be a constant", node.pos, {"number"});
      bool ignored = false;
      const Rational d = evaluate(*node.rhs, n, 0, ignored).coefficient(MultiIndex(n));
      if (sgn(d) == 0) throw ParseError("division by zero", node.pos);
      Jet<Rational> q = evaluate(*node.lhs, n, L, dropped);
      q *= Rational(1 / d);
      return q;
    }
    case Node::Kind::Pow: return power(evaluate(*node.lhs, n, L, dropped), node.exponent, &dropped);
  }
  return Jet<Rational>(n, L);
}

// Exact re-expansion is cheap when the degree bound is close to L.
constexpr long kExactRecheckSlack = 8;

}  // namespace

ParsedExpression parse_expression(std::string_view text, std::size_t n, int L) {
  if (n == 0) throw ParseError("dimension must be positive", 0);
  Parser parser(text, n);
  const NodePtr root = parser.parse();
  const long bound = degree_bound(*root);
  ParsedExpression out;
  if (bound <= L) {
    bool dropped = false;
    out.jet = evaluate(*root, n, L, dropped);
    return out;
  }
  if (bound <= L + kExactRecheckSlack) {
    bool dropped = false;
    const Jet<Rational> full = evaluate(*root, n, static_cast<int>(bound), dropped);
    out.truncated = full.max_degree() > L;
    out.jet = full.truncated(L);
    return out;
  }
  bool dropped = false;
  out.jet = evaluate(*root, n, L, dropped);
  out.truncated = dropped;
  return out;
}

namespace {

template <class T, class Fmt>
std::string render(const Jet<T>& jet, Fmt&& format_abs, bool (*negative)(const T&), bool (*is_one)(const T&)) {
  if (jet.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [a, c] : jet.terms()) {
    const bool neg = negative(c);
    if (first) {
      if (neg) os << '-';
    } else {
      os << (neg ? " - " : " + ");
    }
    first = false;
    bool wrote = false;
    if (a.degree() == 0 || !is_one(c)) {
      os << format_abs(c);
      wrote = true;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == 0) continue;
      if (wrote) os << '*';
      os << 'x' << (i + 1);
      if (a[i] > 1) os << '^' << a[i];
      wrote = true;
    }
  }
  return os.str();
}

}  // namespace

std::string to_expression(const Jet<Rational>& jet) {
  return render<Rational>(
      jet, [](const Rational& c) { return Rational(abs(c)).get_str(); },
      [](const Rational& c) { return sgn(c) < 0; }, [](const Rational& c) { return abs(c) == 1; });
}

std::string to_expression(const Jet<double>& jet) {
  return render<double>(
      jet,
      [](const double& c) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", std::abs(c));
        return std::string(buf);
      },
      [](const double& c) { return c < 0; }, [](const double& c) { return std::abs(c) == 1.0; });
}

}  // namespace morsenorm
