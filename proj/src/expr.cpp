#include "pascali/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace pascali::expr {

namespace {

enum class Kind { Number, ImagUnit, Var, Neg, Add, Sub, Mul, Div, Pow, Call, Matrix };
enum class Func { Exp, Sin, Cos, Conj, Re, Im, Abs };

constexpr int kMaxDepth = 256;
constexpr int kMaxExponent = 4096;

struct FuncName {
  const char* name;
  Func func;
};
constexpr FuncName kFuncs[] = {{"exp", Func::Exp},   {"sin", Func::Sin}, {"cos", Func::Cos}, {"conj", Func::Conj},
                               {"re", Func::Re},     {"im", Func::Im},   {"abs", Func::Abs}};

const char* func_name(Func f) {
  for (const auto& e : kFuncs)
    if (e.func == f) return e.name;
  return "?";
}

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_point(cplx z) {
  std::ostringstream os;
  os << "z = " << format_real(z.real()) << (z.imag() < 0 ? " - " : " + ") << format_real(std::abs(z.imag())) << "i";
  return os.str();
}

}  // namespace

struct Node {
  Kind kind = Kind::Number;
  cplx number{};
  char var = 'z';
  int exponent = 1;
  Func func = Func::Exp;
  int rows = 1;
  int cols = 1;
  std::vector<std::shared_ptr<const Node>> children;
};

ParseError::ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& message)
    : Error([&] {
        std::ostringstream os;
        os << "parse error at offset " << offset << ": " << message;
        if (!expected.empty()) {
          os << " (expected ";
          for (std::size_t k = 0; k < expected.size(); ++k) os << (k ? ", " : "") << expected[k];
          os << ")";
        }
        return os.str();
      }()),
      offset_(offset),
      expected_(std::move(expected)) {}

namespace {

using NodePtr = std::shared_ptr<const Node>;

NodePtr make_binary(Kind k, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->children = {std::move(a), std::move(b)};
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  NodePtr parse_top() {
    skip_ws();
    NodePtr root;
    if (peek() == '[') {
      root = parse_bracket();
    } else {
      root = parse_sum();
    }
    skip_ws();
    if (pos_ != s_.size()) fail({"operator", "end of input"}, "unexpected trailing input");
    return root;
  }

 private:
  [[noreturn]] void fail(std::vector<std::string> expected, const std::string& msg) const {
    throw ParseError(pos_, std::move(expected), msg);
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) ++pos_;
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  bool at_end() const { return pos_ >= s_.size(); }

  bool accept(char c) {
    skip_ws();
    if (peek() == c && !at_end()) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail({std::string("'") + c + "'"}, "missing token");
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p_(p) {
      if (++p_.depth_ > kMaxDepth) p_.fail({}, "expression nested too deeply");
    }
    ~DepthGuard() { --p_.depth_; }
    Parser& p_;
  };

  NodePtr parse_bracket() {
    DepthGuard guard(*this);
    const std::size_t open = pos_;
    expect('[');
    skip_ws();
    auto mat = std::make_shared<Node>();
    mat->kind = Kind::Matrix;
    if (peek() == '[') {
      int cols = -1;
      int rows = 0;
      do {
        skip_ws();
        const std::size_t row_start = pos_;
        expect('[');
        int count = 0;
        do {
          mat->children.push_back(parse_sum());
          ++count;
        } while (accept(','));
        expect(']');
        if (cols >= 0 && count != cols) {
          throw ParseError(row_start, {}, "dimension mismatch in matrix literal rows");
        }
        cols = count;
        ++rows;
      } while (accept(','));
      expect(']');
      mat->rows = rows;
      mat->cols = cols;
    } else {
      int count = 0;
      do {
        mat->children.push_back(parse_sum());
        ++count;
      } while (accept(','));
      expect(']');
      mat->rows = count;
      mat->cols = 1;
    }
    if (mat->children.empty()) throw ParseError(open, {}, "empty bracket literal");
    return mat;
  }

  NodePtr parse_sum() {
    DepthGuard guard(*this);
    NodePtr left = parse_product();
    while (true) {
      if (accept('+')) {
        left = make_binary(Kind::Add, left, parse_product());
      } else if (accept('-')) {
        left = make_binary(Kind::Sub, left, parse_product());
      } else {
        return left;
      }
    }
  }

  NodePtr parse_product() {
    NodePtr left = parse_unary();
    while (true) {
      if (accept('*')) {
        left = make_binary(Kind::Mul, left, parse_unary());
      } else if (accept('/')) {
        left = make_binary(Kind::Div, left, parse_unary());
      } else {
        return left;
      }
    }
  }

  NodePtr parse_unary() {
    DepthGuard guard(*this);
    if (accept('-')) {
      auto n = std::make_shared<Node>();
      n->kind = Kind::Neg;
      n->children = {parse_unary()};
      return n;
    }
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (!accept('^')) return base;
    const bool paren = accept('(');
    const bool negative = accept('-');
    skip_ws();
    const std::size_t start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (pos_ == start) fail({"integer exponent"}, "exponents must be integer literals");
    if (!at_end() && (peek() == '.' || peek() == 'e' || peek() == 'E')) {
      fail({"integer exponent"}, "exponents must be integer literals");
    }
    int value = 0;
    auto res = std::from_chars(s_.data() + start, s_.data() + pos_, value);
    if (res.ec != std::errc() || value > kMaxExponent) {
      pos_ = start;
      fail({}, "exponent too large");
    }
    if (paren) expect(')');
    auto n = std::make_shared<Node>();
    n->kind = Kind::Pow;
    n->exponent = negative ? -value : value;
    n->children = {base};
    return n;
  }

  NodePtr parse_primary() {
    DepthGuard guard(*this);
    skip_ws();
    const std::vector<std::string> primary_expected = {"number", "identifier", "'('", "'-'"};
    if (at_end()) fail(primary_expected, "unexpected end of input");
    const char c = peek();
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_sum();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    // U+1D55A MATHEMATICAL DOUBLE-STRUCK SMALL I
    if (s_.substr(pos_, 4) == "\xF0\x9D\x95\x9A") {
      pos_ += 4;
      auto n = std::make_shared<Node>();
      n->kind = Kind::ImagUnit;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++pos_;
      const std::string_view id = s_.substr(start, pos_ - start);
      auto n = std::make_shared<Node>();
      if (id == "i") {
        n->kind = Kind::ImagUnit;
        return n;
      }
      if (id == "z" || id == "x" || id == "y") {
        n->kind = Kind::Var;
        n->var = id[0];
        return n;
      }
      for (const auto& f : kFuncs) {
        if (id == f.name) {
          n->kind = Kind::Call;
          n->func = f.func;
          expect('(');
          n->children = {parse_sum()};
          expect(')');
          return n;
        }
      }
      pos_ = start;
      fail({"z", "x", "y", "i", "exp", "sin", "cos", "conj", "re", "im", "abs"}, "unknown identifier '" + std::string(id) + "'");
    }
    fail(primary_expected, "unexpected character");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    bool digits = false;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
      ++pos_;
      digits = true;
    }
    if (!at_end() && peek() == '.') {
      ++pos_;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
        ++pos_;
        digits = true;
      }
    }
    if (!digits) {
      pos_ = start;
      fail({"number"}, "malformed number");
    }
    if (!at_end() && (peek() == 'e' || peek() == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        while (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) ++p;
        pos_ = p;
      }
    }
    double value = 0.0;
    auto res = std::from_chars(s_.data() + start, s_.data() + pos_, value);
    if (res.ec != std::errc() || res.ptr != s_.data() + pos_ || !std::isfinite(value)) {
      pos_ = start;
      fail({}, "number out of range");
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::Number;
    n->number = cplx(value, 0.0);
    return n;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

cplx ipow(cplx base, int e, cplx z) {
  if (e < 0) {
    if (base == cplx(0.0, 0.0)) throw EvalError("division by zero (negative power of 0) at " + format_point(z), z);
    return cplx(1.0, 0.0) / ipow(base, -e, z);
  }
  cplx result(1.0, 0.0);
  while (e > 0) {
    if (e & 1) result *= base;
    base *= base;
    e >>= 1;
  }
  return result;
}

cplx eval_node(const Node& n, cplx z) {
  switch (n.kind) {
    case Kind::Number:
      return n.number;
    case Kind::ImagUnit:
      return {0.0, 1.0};
    case Kind::Var:
      return n.var == 'z' ? z : (n.var == 'x' ? cplx(z.real(), 0.0) : cplx(z.imag(), 0.0));
    case Kind::Neg:
      return -eval_node(*n.children[0], z);
    case Kind::Add:
      return eval_node(*n.children[0], z) + eval_node(*n.children[1], z);
    case Kind::Sub:
      return eval_node(*n.children[0], z) - eval_node(*n.children[1], z);
    case Kind::Mul:
      return eval_node(*n.children[0], z) * eval_node(*n.children[1], z);
    case Kind::Div: {
      const cplx num = eval_node(*n.children[0], z);
      const cplx den = eval_node(*n.children[1], z);
      if (den == cplx(0.0, 0.0)) throw EvalError("division by zero at " + format_point(z), z);
      return num / den;
    }
    case Kind::Pow:
      return ipow(eval_node(*n.children[0], z), n.exponent, z);
    case Kind::Call: {
      const cplx a = eval_node(*n.children[0], z);
      switch (n.func) {
        case Func::Exp: return std::exp(a);
        case Func::Sin: return std::sin(a);
        case Func::Cos: return std::cos(a);
        case Func::Conj: return std::conj(a);
        case Func::Re: return {a.real(), 0.0};
        case Func::Im: return {a.imag(), 0.0};
        case Func::Abs: return {std::abs(a), 0.0};
      }
      return {};
    }
    case Kind::Matrix:
      throw EvalError("bracket literal in scalar position", z);
  }
  return {};
}

int precedence(const Node& n) {
  switch (n.kind) {
    case Kind::Add:
    case Kind::Sub: return 1;
    case Kind::Mul:
    case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    default: return 5;
  }
}

void print(const Node& n, std::string& out) {
  auto wrap = [&](const Node& child, bool parens) {
    if (parens) out += '(';
    print(child, out);
    if (parens) out += ')';
  };
  switch (n.kind) {
    case Kind::Number:
      if (n.number.imag() == 0.0) {
        out += format_real(n.number.real());
      } else {
        out += "(" + format_real(n.number.real()) + " + " + format_real(n.number.imag()) + "*i)";
      }
      return;
    case Kind::ImagUnit: out += 'i'; return;
    case Kind::Var: out += n.var; return;
    case Kind::Neg:
      out += '-';
      wrap(*n.children[0], precedence(*n.children[0]) < 3);
      return;
    case Kind::Add:
    case Kind::Sub:
    case Kind::Mul:
    case Kind::Div: {
      const int p = precedence(n);
      wrap(*n.children[0], precedence(*n.children[0]) < p);
      out += n.kind == Kind::Add ? " + " : n.kind == Kind::Sub ? " - " : n.kind == Kind::Mul ? "*" : "/";
      wrap(*n.children[1], precedence(*n.children[1]) <= p);
      return;
    }
    case Kind::Pow:
      wrap(*n.children[0], precedence(*n.children[0]) < 5);
      out += '^';
      out += std::to_string(n.exponent);
      return;
    case Kind::Call:
      out += func_name(n.func);
      out += '(';
      print(*n.children[0], out);
      out += ')';
      return;
    case Kind::Matrix: {
      out += '[';
      for (int r = 0; r < n.rows; ++r) {
        if (r) out += ", ";
        if (n.cols > 1) out += '[';
        for (int c = 0; c < n.cols; ++c) {
          if (c) out += ", ";
          print(*n.children[std::size_t(r * n.cols + c)], out);
        }
        if (n.cols > 1) out += ']';
      }
      out += ']';
      return;
    }
  }
}

bool node_is_zero(const Node& n) {
  if (n.kind == Kind::Number) return n.number == cplx(0.0, 0.0);
  if (n.kind == Kind::Neg) return node_is_zero(*n.children[0]);
  return false;
}

}  // namespace

Expr Expr::parse(std::string_view text) {
  Parser p(text);
  NodePtr root = p.parse_top();
  if (root->kind == Kind::Matrix) return Expr(root, root->rows, root->cols);
  return Expr(root, 1, 1);
}

Value Expr::eval(cplx z) const {
  Value v;
  v.rows = rows_;
  v.cols = cols_;
  if (root_->kind == Kind::Matrix) {
    v.data.reserve(root_->children.size());
    for (const auto& c : root_->children) v.data.push_back(eval_node(*c, z));
  } else {
    v.data = {eval_node(*root_, z)};
  }
  for (const cplx& x : v.data) {
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) {
      throw EvalError("non-finite value at " + format_point(z), z);
    }
  }
  return v;
}

cplx Expr::eval_scalar(cplx z) const {
  if (!is_scalar()) throw DimensionError("expression is not scalar");
  return eval(z).data[0];
}

bool Expr::is_zero() const {
  if (root_->kind == Kind::Matrix) {
    for (const auto& c : root_->children)
      if (!node_is_zero(*c)) return false;
    return true;
  }
  return node_is_zero(*root_);
}

std::string Expr::to_string() const {
  std::string out;
  print(*root_, out);
  return out;
}

}  // namespace pascali::expr
