#include "kslab/expression.hpp"

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace kslab {

namespace {

struct Node {
  enum class Kind { number, variable, unary_minus, add, sub, mul, div, pow, call } kind;
  double value = 0.0;
  std::string name;
  std::vector<std::shared_ptr<const Node>> args;

  double eval(double v) const {
    switch (kind) {
      case Kind::number: return value;
      case Kind::variable: return v;
      case Kind::unary_minus: return -args[0]->eval(v);
      case Kind::add: return args[0]->eval(v) + args[1]->eval(v);
      case Kind::sub: return args[0]->eval(v) - args[1]->eval(v);
      case Kind::mul: return args[0]->eval(v) * args[1]->eval(v);
      case Kind::div: return args[0]->eval(v) / args[1]->eval(v);
      case Kind::pow: return std::pow(args[0]->eval(v), args[1]->eval(v));
      case Kind::call: {
        const double a = args[0]->eval(v);
        if (name == "exp") return std::exp(a);
        if (name == "log") return std::log(a);
        if (name == "sqrt") return std::sqrt(a);
        if (name == "abs") return std::abs(a);
        return std::pow(a, args[1]->eval(v));  // pow
      }
    }
    return 0.0;
  }
};

using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Kind kind, std::vector<NodePtr> args = {}) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->args = std::move(args);
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& src) : src_(src) {}

  NodePtr parse() {
    NodePtr root = expr();
    skip();
    if (pos_ != src_.size()) fail("unexpected trailing input");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("expression '" + src_ + "': " + msg + " at offset " + std::to_string(pos_));
  }

  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Node::Kind::add, {lhs, term()});
      else if (accept('-')) lhs = make(Node::Kind::sub, {lhs, term()});
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Node::Kind::mul, {lhs, unary()});
      else if (accept('/')) lhs = make(Node::Kind::div, {lhs, unary()});
      else return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Node::Kind::unary_minus, {unary()});
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Node::Kind::pow, {base, unary()});
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (accept('(')) {
      NodePtr inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      const double value = std::stod(src_.substr(pos_), &used);
      pos_ += used;
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::number;
      n->value = value;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
      const std::string name = src_.substr(start, pos_ - start);
      if (name == "v") return make(Node::Kind::variable);
      if (name == "pi") {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::number;
        n->value = std::numbers::pi;
        return n;
      }
      const bool binary = name == "pow";
      if (!(binary || name == "exp" || name == "log" || name == "sqrt" || name == "abs")) {
        fail("unknown identifier '" + name + "'");
      }
      if (!accept('(')) fail("expected '(' after " + name);
      std::vector<NodePtr> args{expr()};
      if (binary) {
        if (!accept(',')) fail("pow takes two arguments");
        args.push_back(expr());
      }
      if (!accept(')')) fail("expected ')'");
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::call;
      n->name = name;
      n->args = std::move(args);
      return n;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& src_;
  std::size_t pos_ = 0;
};

}  // namespace

std::function<double(double)> compile_expression(const std::string& source) {
  NodePtr root = Parser(source).parse();
  return [root](double v) { return root->eval(v); };
}

}  // namespace kslab
