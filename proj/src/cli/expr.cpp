// Small expression language for model files:
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := ('-'|'+') unary | postfix
//   postfix := primary ('@' integer)?
//   primary := number ['j'] | name | name '(' args ')' | '(' expr ')' | 'quoted'
// '*' between operators is the matrix product; '@k' embeds an operator on subsystem k.
#include <cctype>
#include <cmath>
#include <set>

#include "openq/cli/model.hpp"
#include "openq/errors.hpp"
#include "openq/factories.hpp"

namespace openq::cli {

namespace {

using Arg = std::variant<Value, std::string>;

// factories whose single argument is the subsystem dimension, so `name@k` can fill it in
const std::set<std::string, std::less<>> sized_ops{"identity", "qeye", "qzero", "destroy", "create",
                                                   "num", "position", "momentum"};

class Parser {
 public:
  Parser(std::string_view s, const ExprContext& ctx, const std::string& path) : s_(s), ctx_(ctx), path_(path) {}

  Value run() {
    Value v = expr();
    skip();
    if (p_ != s_.size()) fail("unexpected '" + std::string(1, s_[p_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& m) const {
    throw ModelError(path_, m + " at column " + std::to_string(p_ + 1) + " in \"" + std::string(s_) + "\"");
  }

  void skip() {
    while (p_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[p_]))) ++p_;
  }
  bool eat(char c) {
    skip();
    if (p_ < s_.size() && s_[p_] == c) {
      ++p_;
      return true;
    }
    return false;
  }

  template <class F>
  Value guard(F&& f) {
    try {
      return f();
    } catch (const ModelError&) {
      throw;
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }

  Value expr() {
    Value v = term();
    for (;;) {
      if (eat('+')) {
        Value r = term();
        v = guard([&] { return add(v, r, 1.0); });
      } else if (eat('-')) {
        Value r = term();
        v = guard([&] { return add(v, r, -1.0); });
      } else {
        return v;
      }
    }
  }

  Value term() {
    Value v = unary();
    for (;;) {
      if (eat('*')) {
        Value r = unary();
        v = guard([&] { return mul(v, r); });
      } else if (eat('/')) {
        Value r = unary();
        const auto* d = std::get_if<cplx>(&r);
        if (!d) fail("division by an operator");
        if (*d == 0.0) fail("division by zero");
        v = guard([&] { return mul(v, Value(1.0 / *d)); });
      } else {
        return v;
      }
    }
  }

  Value unary() {
    if (eat('-')) {
      Value v = unary();
      return mul(Value(cplx(-1.0)), v);
    }
    if (eat('+')) return unary();
    return postfix();
  }

  Value postfix() {
    skip();
    const std::size_t start = p_;
    std::string bare;
    if (p_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[p_])) || s_[p_] == '_')) {
      std::size_t q = p_;
      while (q < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[q])) || s_[q] == '_')) ++q;
      std::size_t r = q;
      while (r < s_.size() && std::isspace(static_cast<unsigned char>(s_[r]))) ++r;
      if (r < s_.size() && s_[r] == '@') {
        bare = std::string(s_.substr(p_, q - p_));
        p_ = q;
      }
    }
    Value v;
    if (bare.empty()) v = primary();
    if (!eat('@')) return v;
    skip();
    std::size_t q = p_;
    while (q < s_.size() && std::isdigit(static_cast<unsigned char>(s_[q]))) ++q;
    if (q == p_) fail("expected subsystem index after '@'");
    const std::size_t k = std::stoul(std::string(s_.substr(p_, q - p_)));
    p_ = q;
    if (k >= ctx_.dims.size()) fail("subsystem index " + std::to_string(k) + " out of range");
    if (!bare.empty()) {
      if (ctx_.params.count(bare)) fail("'@' applied to a scalar");
      if (!is_operator_kind(bare)) {
        p_ = start;
        fail("unknown operator kind '" + bare + "'");
      }
      std::vector<FactoryArg> a;
      if (sized_ops.count(bare)) a.push_back(cplx(double(ctx_.dims[k])));
      v = guard([&] { return Value(make_operator(bare, a)); });
    }
    const auto* op = std::get_if<Qobj>(&v);
    if (!op || !op->isoper()) fail("'@' needs an operator");
    if (op->rows() != ctx_.dims[k] || op->cols() != ctx_.dims[k])
      fail("operator of size " + std::to_string(op->rows()) + " placed on subsystem " + std::to_string(k) +
           " of dimension " + std::to_string(ctx_.dims[k]));
    std::vector<Qobj> parts;
    for (std::size_t j = 0; j < ctx_.dims.size(); ++j) parts.push_back(j == k ? *op : qeye(ctx_.dims[j]));
    return guard([&] { return Value(parts.size() == 1 ? parts[0] : tensor(parts)); });
  }

  Value primary() {
    skip();
    if (p_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[p_];
    if (c == '(') {
      ++p_;
      Value v = expr();
      if (!eat(')')) fail("expected ')'");
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return call_or_name();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Value number() {
    char* e = nullptr;
    const std::string buf(s_.substr(p_));
    const double x = std::strtod(buf.c_str(), &e);
    const std::size_t n = static_cast<std::size_t>(e - buf.c_str());
    if (n == 0) fail("bad number");
    p_ += n;
    if (p_ < s_.size() && s_[p_] == 'j') {
      ++p_;
      return cplx(0, x);
    }
    return cplx(x);
  }

  std::vector<Arg> args() {
    std::vector<Arg> out;
    if (eat(')')) return out;
    for (;;) {
      skip();
      if (p_ < s_.size() && (s_[p_] == '\'' || s_[p_] == '"')) {
        const char q = s_[p_++];
        const std::size_t e = s_.find(q, p_);
        if (e == std::string_view::npos) fail("unterminated string");
        out.emplace_back(std::string(s_.substr(p_, e - p_)));
        p_ = e + 1;
      } else {
        out.emplace_back(expr());
      }
      if (eat(')')) return out;
      if (!eat(',')) fail("expected ',' or ')'");
    }
  }

  static const Qobj& as_qobj(const Arg& a, const char* what) {
    if (const auto* v = std::get_if<Value>(&a))
      if (const auto* q = std::get_if<Qobj>(v)) return *q;
    throw PreconditionError(std::string(what) + ": expected a quantum object");
  }

  static cplx as_scalar(const Arg& a, const char* what) {
    if (const auto* v = std::get_if<Value>(&a))
      if (const auto* s = std::get_if<cplx>(v)) return *s;
    throw PreconditionError(std::string(what) + ": expected a scalar");
  }

  Value call_or_name() {
    const std::size_t start = p_;
    while (p_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[p_])) || s_[p_] == '_')) ++p_;
    const std::string name(s_.substr(start, p_ - start));
    if (!eat('(')) {
      if (auto it = ctx_.params.find(name); it != ctx_.params.end()) return it->second;
      if (name == "pi") return cplx(M_PI);
      if (name == "identity") return qeye(ctx_.dims);
      if (is_operator_kind(name)) {
        // argument-free factories (the Pauli family) are usable bare
        return guard([&] { return Value(make_operator(name, {})); });
      }
      p_ = start;
      fail("unknown name '" + name + "'");
    }
    auto a = args();
    return guard([&]() -> Value { return apply(name, a, start); });
  }

  Value apply(const std::string& name, const std::vector<Arg>& a, std::size_t start) {
    auto one = [&](const char* f) {
      if (a.size() != 1) throw PreconditionError(std::string(f) + ": expects one argument");
    };
    if (name == "sqrt" || name == "exp" || name == "sin" || name == "cos" || name == "abs" || name == "conj" ||
        name == "real" || name == "imag") {
      one(name.c_str());
      const cplx x = as_scalar(a[0], name.c_str());
      if (name == "sqrt") return std::sqrt(x);
      if (name == "exp") return std::exp(x);
      if (name == "sin") return std::sin(x);
      if (name == "cos") return std::cos(x);
      if (name == "abs") return cplx(std::abs(x));
      if (name == "conj") return std::conj(x);
      if (name == "real") return cplx(x.real());
      return cplx(x.imag());
    }
    if (name == "tensor") {
      if (a.empty()) throw PreconditionError("tensor: expects at least one argument");
      std::vector<Qobj> parts;
      for (const auto& x : a) parts.push_back(as_qobj(x, "tensor"));
      return tensor(parts);
    }
    if (name == "dag") {
      one("dag");
      return as_qobj(a[0], "dag").dag();
    }
    if (name == "unit") {
      one("unit");
      return as_qobj(a[0], "unit").unit();
    }
    if (name == "ket2dm") {
      one("ket2dm");
      return ket2dm(as_qobj(a[0], "ket2dm"));
    }
    std::vector<FactoryArg> fa;
    for (const auto& x : a) {
      if (const auto* s = std::get_if<std::string>(&x))
        fa.emplace_back(*s);
      else
        fa.emplace_back(as_scalar(x, name.c_str()));
    }
    if (is_operator_kind(name)) return make_operator(name, fa);
    if (is_state_kind(name)) return make_state(name, fa);
    p_ = start;
    fail("unknown factory kind '" + name + "'");
  }

  static Value add(const Value& a, const Value& b, double sign) {
    if (const auto* x = std::get_if<cplx>(&a)) {
      if (const auto* y = std::get_if<cplx>(&b)) return *x + sign * *y;
      throw PreconditionError("cannot add a scalar and a quantum object");
    }
    const auto& qa = std::get<Qobj>(a);
    if (const auto* qb = std::get_if<Qobj>(&b)) return sign > 0 ? qa + *qb : qa - *qb;
    throw PreconditionError("cannot add a quantum object and a scalar");
  }

  static Value mul(const Value& a, const Value& b) {
    const auto* x = std::get_if<cplx>(&a);
    const auto* y = std::get_if<cplx>(&b);
    if (x && y) return *x * *y;
    if (x) return *x * std::get<Qobj>(b);
    if (y) return *y * std::get<Qobj>(a);
    return std::get<Qobj>(a) * std::get<Qobj>(b);
  }

  std::string_view s_;
  const ExprContext& ctx_;
  const std::string& path_;
  std::size_t p_ = 0;
};

}  // namespace

Value eval_expr(std::string_view src, const ExprContext& ctx, const std::string& path) {
  return Parser(src, ctx, path).run();
}

}  // namespace openq::cli
