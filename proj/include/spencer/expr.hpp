#pragma once

// Coefficient expression language: an immutable AST over real literals,
// coordinates x1..xN, the constants pi and e, + - * / with integer powers,
// and the functions sin, cos, exp, sqrt, log.
//
// Grammar (EBNF):
//   expr    = term { ("+" | "-") term } ;
//   term    = unary { ("*" | "/") unary } ;
//   unary   = ("-" | "+") unary | power ;
//   power   = primary { "^" intexp } ;
//   intexp  = [ "-" ] INTEGER | "(" [ "-" ] INTEGER ")" ;
//   primary = NUMBER | "x" INTEGER | "pi" | "e"
//           | FUNC "(" expr ")" | "(" expr ")" ;
//   FUNC    = "sin" | "cos" | "exp" | "sqrt" | "log" ;
//
// Precedence, highest first: ^, unary minus, * /, + -.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spencer {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

enum class Op : std::uint8_t { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Sqrt, Log };

struct Node;

/// Shared immutable expression handle. Copies share structure.
class Expr {
 public:
  Expr();  // the constant 0
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static Expr constant(double v);
  static Expr named_constant(std::string name, double v);
  /// Coordinate x_{index+1}; index is zero-based.
  static Expr var(int index);

  const Node& node() const { return *node_; }
  const Node* get() const { return node_.get(); }
  Op op() const;
  bool is_const() const;
  bool is_const(double v) const;
  double const_value() const;

  /// Largest zero-based variable index used, or -1 for closed expressions.
  int max_var() const;
  double eval(std::span<const double> x) const;
  std::string str() const;

 private:
  std::shared_ptr<const Node> node_;
};

struct Node {
  Op op = Op::Const;
  double value = 0.0;  // Const
  int index = 0;       // Var: zero-based coordinate; Pow: exponent
  std::string name;    // Const: "pi" / "e" when named
  Expr a{std::shared_ptr<const Node>()};  // unused children stay null
  Expr b{std::shared_ptr<const Node>()};
};

// Simplifying constructors: fold constants and drop neutral elements, so that
// derivatives of constant subtrees are literally zero.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, int k);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr sqrt(const Expr& a);
Expr log(const Expr& a);

inline Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
inline Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
inline Expr operator-(const Expr& a, double b) { return a - Expr::constant(b); }

/// Parses `text` with coordinates restricted to x1..x{dim}.
Expr parse_expr(std::string_view text, int dim);

/// Exact derivative with respect to the zero-based coordinate `axis`.
Expr symbolic_diff(const Expr& e, int axis);

/// Straight-line program evaluating a batch of expressions with common
/// subexpressions shared. Evaluation is reentrant: scratch is caller-owned.
class Tape {
 public:
  explicit Tape(std::span<const Expr> outputs);

  std::size_t output_count() const { return outputs_.size(); }
  std::size_t slot_count() const { return code_.size(); }
  void eval(std::span<const double> x, std::span<double> scratch, std::span<double> out) const;

 private:
  struct Instr {
    Op op;
    int a = -1, b = -1;
    int ival = 0;
    double value = 0.0;
  };
  std::vector<Instr> code_;
  std::vector<int> outputs_;
};

}  // namespace spencer
