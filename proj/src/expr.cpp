#include "spencer/expr.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace spencer {

namespace {

double ipow(double x, int k) {
  if (k < 0) return 1.0 / ipow(x, -k);
  double r = 1.0;
  double b = x;
  unsigned e = static_cast<unsigned>(k);
  while (e) {
    if (e & 1u) r *= b;
    b *= b;
    e >>= 1u;
  }
  return r;
}

double apply_unary(Op op, double a) {
  switch (op) {
    case Op::Neg: return -a;
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Exp: return std::exp(a);
    case Op::Sqrt: return std::sqrt(a);
    case Op::Log: return std::log(a);
    default: return a;
  }
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    default: return 0.0;
  }
}

Expr make(Op op, Expr a, Expr b = Expr(), int index = 0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  n->index = index;
  return Expr(std::move(n));
}

Expr make_unary(Op op, const Expr& a) {
  if (a.is_const()) {
    double v = apply_unary(op, a.const_value());
    if (std::isfinite(v)) return Expr::constant(v);
  }
  return make(op, a);
}

}  // namespace

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::constant(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  return Expr(std::move(n));
}

Expr Expr::named_constant(std::string name, double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::var(int index) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->index = index;
  return Expr(std::move(n));
}

Op Expr::op() const { return node_->op; }
bool Expr::is_const() const { return node_->op == Op::Const; }
bool Expr::is_const(double v) const { return is_const() && node_->value == v; }
double Expr::const_value() const { return node_->value; }

int Expr::max_var() const {
  std::unordered_map<const Node*, int> memo;
  auto rec = [&](auto&& self, const Node* n) -> int {
    if (auto it = memo.find(n); it != memo.end()) return it->second;
    int r = -1;
    switch (n->op) {
      case Op::Const: break;
      case Op::Var: r = n->index; break;
      case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
        r = std::max(self(self, n->a.get()), self(self, n->b.get()));
        break;
      default: r = self(self, n->a.get()); break;
    }
    memo.emplace(n, r);
    return r;
  };
  return rec(rec, node_.get());
}

double Expr::eval(std::span<const double> x) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return x[static_cast<std::size_t>(n.index)];
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
      return apply_binary(n.op, n.a.eval(x), n.b.eval(x));
    case Op::Pow: return ipow(n.a.eval(x), n.index);
    default: return apply_unary(n.op, n.a.eval(x));
  }
}

// ---- simplifying builders ------------------------------------------------

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return Expr::constant(a.const_value() + b.const_value());
  if (a.is_const(0.0)) return b;
  if (b.is_const(0.0)) return a;
  return make(Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return Expr::constant(a.const_value() - b.const_value());
  if (b.is_const(0.0)) return a;
  if (a.is_const(0.0)) return -b;
  if (a.get() == b.get()) return Expr::constant(0.0);
  return make(Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return Expr::constant(a.const_value() * b.const_value());
  if (a.is_const(0.0) || b.is_const(0.0)) return Expr::constant(0.0);
  if (a.is_const(1.0)) return b;
  if (b.is_const(1.0)) return a;
  if (a.is_const(-1.0)) return -b;
  if (b.is_const(-1.0)) return -a;
  return make(Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const() && b.const_value() != 0.0)
    return Expr::constant(a.const_value() / b.const_value());
  if (a.is_const(0.0) && !b.is_const(0.0)) return Expr::constant(0.0);
  if (b.is_const(1.0)) return a;
  return make(Op::Div, a, b);
}

Expr operator-(const Expr& a) {
  if (a.is_const()) return Expr::constant(-a.const_value());
  if (a.op() == Op::Neg) return a.node().a;
  return make(Op::Neg, a);
}

Expr pow(const Expr& a, int k) {
  if (k == 0) return Expr::constant(1.0);
  if (k == 1) return a;
  if (a.is_const()) {
    double v = ipow(a.const_value(), k);
    if (std::isfinite(v)) return Expr::constant(v);
  }
  return make(Op::Pow, a, Expr(), k);
}

Expr sin(const Expr& a) { return make_unary(Op::Sin, a); }
Expr cos(const Expr& a) { return make_unary(Op::Cos, a); }
Expr exp(const Expr& a) { return make_unary(Op::Exp, a); }
Expr sqrt(const Expr& a) { return make_unary(Op::Sqrt, a); }
Expr log(const Expr& a) { return make_unary(Op::Log, a); }

// ---- printing ------------------------------------------------------------

namespace {

std::string number_text(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Sqrt: return "sqrt";
    case Op::Log: return "log";
    default: return "?";
  }
}

int level(const Node& n) {
  switch (n.op) {
    case Op::Add: case Op::Sub: return 1;
    case Op::Mul: case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Const: return (n.name.empty() && std::signbit(n.value)) ? 3 : 5;
    default: return 5;
  }
}

void print(const Node& n, std::string& out);

void print_child(const Node& n, int min_level, std::string& out) {
  if (level(n) < min_level) {
    out += '(';
    print(n, out);
    out += ')';
  } else {
    print(n, out);
  }
}

void print(const Node& n, std::string& out) {
  switch (n.op) {
    case Op::Const:
      out += n.name.empty() ? number_text(n.value) : n.name;
      return;
    case Op::Var:
      out += 'x';
      out += std::to_string(n.index + 1);
      return;
    case Op::Neg:
      out += '-';
      print_child(n.a.node(), 3, out);
      return;
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: {
      int own = level(n);
      print_child(n.a.node(), own, out);
      switch (n.op) {
        case Op::Add: out += " + "; break;
        case Op::Sub: out += " - "; break;
        case Op::Mul: out += '*'; break;
        default: out += '/'; break;
      }
      print_child(n.b.node(), own + 1, out);
      return;
    }
    case Op::Pow:
      print_child(n.a.node(), 5, out);
      out += '^';
      if (n.index < 0) {
        out += "(" + std::to_string(n.index) + ")";
      } else {
        out += std::to_string(n.index);
      }
      return;
    default:
      out += function_name(n.op);
      out += '(';
      print(n.a.node(), out);
      out += ')';
      return;
  }
}

}  // namespace

std::string Expr::str() const {
  std::string out;
  print(*node_, out);
  return out;
}

// ---- parsing -------------------------------------------------------------

namespace {

class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  Expr parse() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
    Expr e = expr();
    skip_ws();
    if (pos_ < text_.size()) throw ParseError("unexpected character '" + std::string(1, text_[pos_]) + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make_checked(Op::Add, lhs, term());
      else if (accept('-')) lhs = make_checked(Op::Sub, lhs, term());
      else return lhs;
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make_checked(Op::Mul, lhs, unary());
      else if (accept('/')) lhs = make_checked(Op::Div, lhs, unary());
      else return lhs;
    }
  }

  // Parsed trees keep their literal structure apart from folding signs into
  // literals, so printing and reparsing reproduces the same text.
  static Expr make_checked(Op op, const Expr& a, const Expr& b) { return make(op, a, b); }

  Expr unary() {
    if (accept('-')) {
      Expr a = unary();
      if (a.is_const() && a.node().name.empty()) return Expr::constant(-a.const_value());
      return make(Op::Neg, a);
    }
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    while (accept('^')) base = make(Op::Pow, base, Expr(), exponent());
    return base;
  }

  int exponent() {
    skip_ws();
    bool paren = accept('(');
    skip_ws();
    bool neg = accept('-');
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError("exponent must be an integer literal", start);
    int k = 0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, k);
    if (res.ec != std::errc()) throw ParseError("exponent out of range", start);
    if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))
      throw ParseError("exponent must be an integer literal", start);
    if (paren) expect(')');
    return neg ? -k : k;
  }

  Expr primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  Expr number() {
    std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        digits();
      } else {
        pos_ = save;
      }
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_) throw ParseError("malformed number", start);
    return Expr::constant(v);
  }

  Expr identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string_view id = text_.substr(start, pos_ - start);
    if (id == "pi") return Expr::named_constant("pi", std::numbers::pi);
    if (id == "e") return Expr::named_constant("e", std::numbers::e);
    if (id.size() > 1 && id[0] == 'x' && std::isdigit(static_cast<unsigned char>(id[1]))) {
      int k = 0;
      auto res = std::from_chars(id.data() + 1, id.data() + id.size(), k);
      if (res.ec != std::errc() || res.ptr != id.data() + id.size()) throw ParseError("unknown identifier '" + std::string(id) + "'", start);
      if (k < 1 || k > dim_)
        throw ParseError("variable index out of range: '" + std::string(id) + "' (dimension " + std::to_string(dim_) + ")", start);
      return Expr::var(k - 1);
    }
    Op fn;
    if (id == "sin") fn = Op::Sin;
    else if (id == "cos") fn = Op::Cos;
    else if (id == "exp") fn = Op::Exp;
    else if (id == "sqrt") fn = Op::Sqrt;
    else if (id == "log") fn = Op::Log;
    else throw ParseError("unknown identifier '" + std::string(id) + "'", start);
    if (!accept('(')) throw ParseError("expected '(' after function name", pos_);
    Expr arg = expr();
    expect(')');
    return make(fn, arg);
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view text, int dim) {
  if (dim < 1) throw std::invalid_argument("parse_expr: dimension must be positive");
  return Parser(text, dim).parse();
}

// ---- differentiation -----------------------------------------------------

Expr symbolic_diff(const Expr& e, int axis) {
  std::unordered_map<const Node*, Expr> memo;
  auto rec = [&](auto&& self, const Expr& x) -> Expr {
    if (auto it = memo.find(x.get()); it != memo.end()) return it->second;
    const Node& n = x.node();
    Expr d;
    switch (n.op) {
      case Op::Const: d = Expr::constant(0.0); break;
      case Op::Var: d = Expr::constant(n.index == axis ? 1.0 : 0.0); break;
      case Op::Neg: d = -self(self, n.a); break;
      case Op::Add: d = self(self, n.a) + self(self, n.b); break;
      case Op::Sub: d = self(self, n.a) - self(self, n.b); break;
      case Op::Mul: d = self(self, n.a) * n.b + n.a * self(self, n.b); break;
      case Op::Div: {
        Expr da = self(self, n.a);
        Expr db = self(self, n.b);
        d = da / n.b - n.a * db / pow(n.b, 2);
        break;
      }
      case Op::Pow:
        d = Expr::constant(n.index) * pow(n.a, n.index - 1) * self(self, n.a);
        break;
      case Op::Sin: d = cos(n.a) * self(self, n.a); break;
      case Op::Cos: d = -(sin(n.a) * self(self, n.a)); break;
      case Op::Exp: d = x * self(self, n.a); break;
      case Op::Sqrt: d = self(self, n.a) / (Expr::constant(2.0) * x); break;
      case Op::Log: d = self(self, n.a) / n.a; break;
    }
    memo.emplace(x.get(), d);
    return d;
  };
  return rec(rec, e);
}

// ---- tape ----------------------------------------------------------------

namespace {

struct InstrKey {
  Op op;
  int a, b, ival;
  std::uint64_t bits;
  bool operator==(const InstrKey&) const = default;
};

struct InstrKeyHash {
  std::size_t operator()(const InstrKey& k) const {
    std::size_t h = std::hash<std::uint64_t>{}(k.bits);
    auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2); };
    mix(static_cast<std::size_t>(k.op));
    mix(static_cast<std::size_t>(k.a + 1));
    mix(static_cast<std::size_t>(k.b + 1));
    mix(static_cast<std::size_t>(k.ival));
    return h;
  }
};

}  // namespace

Tape::Tape(std::span<const Expr> outputs) {
  std::unordered_map<const Node*, int> by_ptr;
  std::unordered_map<InstrKey, int, InstrKeyHash> by_key;
  auto emit = [&](auto&& self, const Node* n) -> int {
    if (auto it = by_ptr.find(n); it != by_ptr.end()) return it->second;
    Instr ins{n->op};
    switch (n->op) {
      case Op::Const: ins.value = n->value; break;
      case Op::Var: ins.ival = n->index; break;
      case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
        ins.a = self(self, n->a.get());
        ins.b = self(self, n->b.get());
        break;
      case Op::Pow:
        ins.a = self(self, n->a.get());
        ins.ival = n->index;
        break;
      default: ins.a = self(self, n->a.get()); break;
    }
    InstrKey key{ins.op, ins.a, ins.b, ins.ival, std::bit_cast<std::uint64_t>(ins.value)};
    int slot;
    if (auto it = by_key.find(key); it != by_key.end()) {
      slot = it->second;
    } else {
      slot = static_cast<int>(code_.size());
      code_.push_back(ins);
      by_key.emplace(key, slot);
    }
    by_ptr.emplace(n, slot);
    return slot;
  };
  outputs_.reserve(outputs.size());
  for (const Expr& e : outputs) outputs_.push_back(emit(emit, e.get()));
}

void Tape::eval(std::span<const double> x, std::span<double> scratch, std::span<double> out) const {
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& ins = code_[i];
    double v;
    switch (ins.op) {
      case Op::Const: v = ins.value; break;
      case Op::Var: v = x[static_cast<std::size_t>(ins.ival)]; break;
      case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
        v = apply_binary(ins.op, scratch[static_cast<std::size_t>(ins.a)], scratch[static_cast<std::size_t>(ins.b)]);
        break;
      case Op::Pow: v = ipow(scratch[static_cast<std::size_t>(ins.a)], ins.ival); break;
      default: v = apply_unary(ins.op, scratch[static_cast<std::size_t>(ins.a)]); break;
    }
    scratch[i] = v;
  }
  for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = scratch[static_cast<std::size_t>(outputs_[k])];
}

}  // namespace spencer
