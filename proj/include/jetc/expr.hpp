#pragma once

// Symbolic scalar expressions over named coordinates.
//
// An Expr is an immutable tree: constants (exact rationals or doubles),
// variables, n-ary Add/Mul, binary Sub/Div, Neg, Pow with a non-negative
// integer exponent, and the unary functions sin, cos, exp, log, sqrt.
// Trees are shared by reference and never mutated after construction, so
// the same Expr can be evaluated from several threads.
//
// Operators (+, -, *, /) build raw nodes; nothing is rewritten until
// simplify() is called. diff() returns simplified results.

#include <jetc/error.hpp>

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jetc {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp, Log, Sqrt };

inline bool is_function(Op op) {
    return op == Op::Sin || op == Op::Cos || op == Op::Exp || op == Op::Log || op == Op::Sqrt;
}

inline const char* function_name(Op op) {
    switch (op) {
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Sqrt: return "sqrt";
        default: return "";
    }
}

// Scalar constant. Exact rationals stay exact through +, -, *, / until an
// int64 overflow forces a fall back to double.
class Number {
public:
    Number() = default;

    static Number integer(std::int64_t v) { return rational(v, 1); }

    static Number rational(std::int64_t num, std::int64_t den) {
        if (den == 0) throw EvalDomainError("rational constant with zero denominator");
        if (den < 0) {
            if (num == INT64_MIN || den == INT64_MIN) return real(double(num) / double(den));
            num = -num;
            den = -den;
        }
        std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
        Number n;
        n.exact_ = true;
        n.num_ = num;
        n.den_ = den;
        n.value_ = double(num) / double(den);
        return n;
    }

    static Number real(double v) {
        Number n;
        n.exact_ = false;
        n.value_ = v;
        return n;
    }

    bool exact() const { return exact_; }
    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double value() const { return value_; }

    bool is_zero() const { return exact_ ? num_ == 0 : value_ == 0.0; }
    bool is_one() const { return exact_ ? (num_ == 1 && den_ == 1) : value_ == 1.0; }
    bool is_negative() const { return exact_ ? num_ < 0 : value_ < 0.0; }
    bool is_integer() const { return exact_ && den_ == 1; }

    friend Number operator-(const Number& a) {
        if (a.exact_ && a.num_ != INT64_MIN) return rational(-a.num_, a.den_);
        return real(-a.value_);
    }

    friend Number operator+(const Number& a, const Number& b) {
        if (a.exact_ && b.exact_) {
            std::int64_t x, y, num, den;
            if (!__builtin_mul_overflow(a.num_, b.den_, &x) && !__builtin_mul_overflow(b.num_, a.den_, &y) &&
                !__builtin_add_overflow(x, y, &num) && !__builtin_mul_overflow(a.den_, b.den_, &den))
                return rational(num, den);
        }
        return real(a.value_ + b.value_);
    }

    friend Number operator-(const Number& a, const Number& b) { return a + (-b); }

    friend Number operator*(const Number& a, const Number& b) {
        if (a.exact_ && b.exact_) {
            std::int64_t num, den;
            if (!__builtin_mul_overflow(a.num_, b.num_, &num) && !__builtin_mul_overflow(a.den_, b.den_, &den))
                return rational(num, den);
        }
        return real(a.value_ * b.value_);
    }

    friend Number operator/(const Number& a, const Number& b) {
        if (b.is_zero()) throw EvalDomainError("division by zero");
        if (a.exact_ && b.exact_) {
            std::int64_t num, den;
            if (!__builtin_mul_overflow(a.num_, b.den_, &num) && !__builtin_mul_overflow(a.den_, b.num_, &den))
                return rational(num, den);
        }
        return real(a.value_ / b.value_);
    }

    Number pow(int n) const {
        Number r = integer(1);
        for (int i = 0; i < n; ++i) r = r * *this;
        return r;
    }

    // Printed so that the grammar reads it back to the same double.
    std::string str() const {
        if (exact_) {
            if (den_ == 1) return num_ < 0 ? "(" + std::to_string(num_) + ")" : std::to_string(num_);
            return "(" + std::to_string(num_) + "/" + std::to_string(den_) + ")";
        }
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", value_);
        std::string s = buf;
        return value_ < 0 ? "(" + s + ")" : s;
    }

private:
    bool exact_ = true;
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
    double value_ = 0.0;
};

struct Node;

class Expr {
public:
    Expr();  // the exact constant 0

    static Expr constant(Number n);
    static Expr constant(double v) { return constant(Number::real(v)); }
    static Expr integer(std::int64_t v) { return constant(Number::integer(v)); }
    static Expr var(std::string name);
    static Expr make(Op op, std::vector<Expr> args, int exponent = 0);

    Op op() const;
    const std::vector<Expr>& args() const;
    const Expr& arg(std::size_t i) const { return args()[i]; }
    const std::string& name() const;
    const Number& number() const;
    int exponent() const;

    bool is_constant() const { return op() == Op::Const; }
    bool is_zero_literal() const;
    bool is_var(std::string_view n) const { return op() == Op::Var && name() == n; }

    std::string str() const;

    // Structural identity of the printed forms.
    bool same_as(const Expr& other) const { return node_ == other.node_ || str() == other.str(); }

private:
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

struct Node {
    Op op = Op::Const;
    Number number;
    std::string name;
    std::vector<Expr> args;
    int exponent = 0;
};

inline Expr::Expr() : node_(std::make_shared<const Node>()) {}

inline Expr Expr::constant(Number n) {
    auto node = std::make_shared<Node>();
    node->op = Op::Const;
    node->number = n;
    return Expr(std::move(node));
}

inline Expr Expr::var(std::string name) {
    auto node = std::make_shared<Node>();
    node->op = Op::Var;
    node->name = std::move(name);
    return Expr(std::move(node));
}

inline Expr Expr::make(Op op, std::vector<Expr> args, int exponent) {
    assert(op != Op::Const && op != Op::Var);
    if (op == Op::Pow && exponent < 0) throw Error("Pow exponent must be a non-negative integer");
    auto node = std::make_shared<Node>();
    node->op = op;
    node->args = std::move(args);
    node->exponent = exponent;
    return Expr(std::move(node));
}

inline Op Expr::op() const { return node_->op; }
inline const std::vector<Expr>& Expr::args() const { return node_->args; }
inline const std::string& Expr::name() const { return node_->name; }
inline const Number& Expr::number() const { return node_->number; }
inline int Expr::exponent() const { return node_->exponent; }
inline bool Expr::is_zero_literal() const { return op() == Op::Const && number().is_zero(); }

inline Expr operator+(const Expr& a, const Expr& b) { return Expr::make(Op::Add, {a, b}); }
inline Expr operator-(const Expr& a, const Expr& b) { return Expr::make(Op::Sub, {a, b}); }
inline Expr operator*(const Expr& a, const Expr& b) { return Expr::make(Op::Mul, {a, b}); }
inline Expr operator/(const Expr& a, const Expr& b) { return Expr::make(Op::Div, {a, b}); }
inline Expr operator-(const Expr& a) { return Expr::make(Op::Neg, {a}); }
inline Expr pow(const Expr& base, int n) { return Expr::make(Op::Pow, {base}, n); }
inline Expr sin(const Expr& a) { return Expr::make(Op::Sin, {a}); }
inline Expr cos(const Expr& a) { return Expr::make(Op::Cos, {a}); }
inline Expr exp(const Expr& a) { return Expr::make(Op::Exp, {a}); }
inline Expr log(const Expr& a) { return Expr::make(Op::Log, {a}); }
inline Expr sqrt(const Expr& a) { return Expr::make(Op::Sqrt, {a}); }

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline bool is_sum(const Expr& e) { return e.op() == Op::Add || e.op() == Op::Sub; }

// Atoms may be followed by '^' without parentheses.
inline bool is_atom(const Expr& e) {
    if (e.op() == Op::Var || is_function(e.op())) return true;
    if (e.op() == Op::Const) {
        const Number& n = e.number();
        return n.is_integer() && !n.is_negative();
    }
    return false;
}

inline void print(const Expr& e, std::string& out) {
    auto paren = [&out](const Expr& x) {
        out += '(';
        print(x, out);
        out += ')';
    };
    switch (e.op()) {
        case Op::Const: out += e.number().str(); break;
        case Op::Var: out += e.name(); break;
        case Op::Add:
            for (std::size_t i = 0; i < e.args().size(); ++i) {
                const Expr& a = e.arg(i);
                if (i > 0) out += " + ";
                if (i > 0 && is_sum(a)) paren(a);
                else print(a, out);
            }
            break;
        case Op::Sub:
            print(e.arg(0), out);
            out += " - ";
            if (is_sum(e.arg(1))) paren(e.arg(1));
            else print(e.arg(1), out);
            break;
        case Op::Mul:
            for (std::size_t i = 0; i < e.args().size(); ++i) {
                const Expr& a = e.arg(i);
                if (i > 0) out += '*';
                if (is_sum(a) || a.op() == Op::Div || (i > 0 && a.op() == Op::Mul)) paren(a);
                else print(a, out);
            }
            break;
        case Op::Div:
            if (is_sum(e.arg(0)) || e.arg(0).op() == Op::Div) paren(e.arg(0));
            else print(e.arg(0), out);
            out += '/';
            if (is_atom(e.arg(1)) || e.arg(1).op() == Op::Pow) print(e.arg(1), out);
            else paren(e.arg(1));
            break;
        case Op::Neg:
            out += '-';
            paren(e.arg(0));
            break;
        case Op::Pow:
            if (is_atom(e.arg(0))) print(e.arg(0), out);
            else paren(e.arg(0));
            out += '^';
            out += std::to_string(e.exponent());
            break;
        default:
            out += function_name(e.op());
            paren(e.arg(0));
            break;
    }
}

}  // namespace detail

inline std::string Expr::str() const {
    std::string out;
    detail::print(*this, out);
    return out;
}

inline std::string to_string(const Expr& e) { return e.str(); }

// ---------------------------------------------------------------------------
// Evaluation

using Binding = std::map<std::string, double>;

namespace detail {

inline double ipow(double b, int n) {
    double r = 1.0;
    while (n > 0) {
        if (n & 1) r *= b;
        b *= b;
        n >>= 1;
    }
    return r;
}

inline double apply_function(Op op, double a) {
    switch (op) {
        case Op::Sin: return std::sin(a);
        case Op::Cos: return std::cos(a);
        case Op::Exp: return std::exp(a);
        case Op::Log:
            if (!(a > 0.0)) throw EvalDomainError("log of non-positive value");
            return std::log(a);
        case Op::Sqrt:
            if (!(a >= 0.0)) throw EvalDomainError("sqrt of negative value");
            return std::sqrt(a);
        default: throw Error("not a function");
    }
}

inline double divide(double a, double b) {
    if (b == 0.0) throw EvalDomainError("division by zero");
    return a / b;
}

}  // namespace detail

inline double eval(const Expr& e, const Binding& at) {
    switch (e.op()) {
        case Op::Const: return e.number().value();
        case Op::Var: {
            auto it = at.find(e.name());
            if (it == at.end()) throw UnknownVariable(e.name());
            return it->second;
        }
        case Op::Add: {
            double s = eval(e.arg(0), at);
            for (std::size_t i = 1; i < e.args().size(); ++i) s += eval(e.arg(i), at);
            return s;
        }
        case Op::Sub: return eval(e.arg(0), at) - eval(e.arg(1), at);
        case Op::Mul: {
            double p = eval(e.arg(0), at);
            for (std::size_t i = 1; i < e.args().size(); ++i) p *= eval(e.arg(i), at);
            return p;
        }
        case Op::Div: return detail::divide(eval(e.arg(0), at), eval(e.arg(1), at));
        case Op::Neg: return -eval(e.arg(0), at);
        case Op::Pow: return detail::ipow(eval(e.arg(0), at), e.exponent());
        default: return detail::apply_function(e.op(), eval(e.arg(0), at));
    }
}

inline void collect_variables(const Expr& e, std::set<std::string>& out) {
    if (e.op() == Op::Var) {
        out.insert(e.name());
        return;
    }
    for (const Expr& a : e.args()) collect_variables(a, out);
}

inline std::set<std::string> free_variables(const Expr& e) {
    std::set<std::string> out;
    collect_variables(e, out);
    return out;
}

// Evaluator with variables resolved to positions of a value array; used in
// the integrator's inner loops.
class CompiledExpr {
public:
    CompiledExpr() = default;

    CompiledExpr(const Expr& e, const std::vector<std::string>& slots) {
        std::size_t depth = 0;
        emit(e, slots, depth);
    }

    double operator()(std::span<const double> values) const {
        if (max_depth_ <= 64) {
            double stack[64];
            return run(values, stack);
        }
        std::vector<double> stack(max_depth_);
        return run(values, stack.data());
    }

private:
    struct Instr {
        Op op;
        int index = 0;  // slot, argument count or exponent
        double constant = 0.0;
    };

    void emit(const Expr& e, const std::vector<std::string>& slots, std::size_t& depth) {
        switch (e.op()) {
            case Op::Const:
                code_.push_back({Op::Const, 0, e.number().value()});
                bump(depth, 1);
                return;
            case Op::Var: {
                auto it = std::find(slots.begin(), slots.end(), e.name());
                if (it == slots.end()) throw UnknownVariable(e.name());
                code_.push_back({Op::Var, int(it - slots.begin()), 0.0});
                bump(depth, 1);
                return;
            }
            default: break;
        }
        for (const Expr& a : e.args()) emit(a, slots, depth);
        int count = int(e.args().size());
        code_.push_back({e.op(), e.op() == Op::Pow ? e.exponent() : count, 0.0});
        depth = depth - std::size_t(count) + 1;
    }

    void bump(std::size_t& depth, std::size_t by) {
        depth += by;
        max_depth_ = std::max(max_depth_, depth);
    }

    double run(std::span<const double> values, double* stack) const {
        std::size_t top = 0;
        for (const Instr& ins : code_) {
            switch (ins.op) {
                case Op::Const: stack[top++] = ins.constant; break;
                case Op::Var: stack[top++] = values[std::size_t(ins.index)]; break;
                case Op::Add: {
                    std::size_t base = top - std::size_t(ins.index);
                    double s = stack[base];
                    for (std::size_t i = base + 1; i < top; ++i) s += stack[i];
                    top = base;
                    stack[top++] = s;
                    break;
                }
                case Op::Mul: {
                    std::size_t base = top - std::size_t(ins.index);
                    double p = stack[base];
                    for (std::size_t i = base + 1; i < top; ++i) p *= stack[i];
                    top = base;
                    stack[top++] = p;
                    break;
                }
                case Op::Sub:
                    --top;
                    stack[top - 1] -= stack[top];
                    break;
                case Op::Div:
                    --top;
                    stack[top - 1] = detail::divide(stack[top - 1], stack[top]);
                    break;
                case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
                case Op::Pow: stack[top - 1] = detail::ipow(stack[top - 1], ins.index); break;
                default: stack[top - 1] = detail::apply_function(ins.op, stack[top - 1]); break;
            }
        }
        return stack[0];
    }

    std::vector<Instr> code_;
    std::size_t max_depth_ = 0;
};

// ---------------------------------------------------------------------------
// Simplification
//
// Expressions are normalized into a sum of terms, each a rational
// coefficient times a sorted product of powers of opaque factors (variables,
// function applications, quotients). Products of sums are distributed as
// long as the expansion stays below kMaxTerms; past that the factors are
// kept unexpanded. Equal factors merge exponents and equal terms merge
// coefficients, which gives 0+e -> e, 0*e -> 0, 1*e -> e, e-e -> 0, constant folding
// and flattening of nested Add/Mul.

namespace detail {

inline constexpr std::size_t kMaxTerms = 256;

struct Factor {
    Expr base;
    int exponent;
    std::string key;
};

struct Term {
    Number coef;
    std::vector<Factor> factors;  // sorted by key, distinct keys
    std::string key;
};

using Sum = std::vector<Term>;  // sorted by key, distinct keys, nonzero coefs

inline std::string term_key(const std::vector<Factor>& fs) {
    std::string k;
    for (const Factor& f : fs) {
        if (!k.empty()) k += '*';
        k += f.key;
        if (f.exponent != 1) k += "^" + std::to_string(f.exponent);
    }
    return k;
}

inline Sum constant_sum(const Number& n) {
    if (n.is_zero()) return {};
    return {Term{n, {}, ""}};
}

inline Sum factor_sum(const Expr& base, int exponent = 1) {
    Factor f{base, exponent, base.str()};
    Term t{Number::integer(1), {f}, ""};
    t.key = term_key(t.factors);
    return {t};
}

inline Sum add_sums(const Sum& a, const Sum& b) {
    std::map<std::string, Term> merged;
    for (const Sum* s : {&a, &b}) {
        for (const Term& t : *s) {
            auto [it, inserted] = merged.emplace(t.key, t);
            if (!inserted) it->second.coef = it->second.coef + t.coef;
        }
    }
    Sum out;
    for (auto& [k, t] : merged)
        if (!t.coef.is_zero()) out.push_back(std::move(t));
    return out;
}

inline Sum scale_sum(const Sum& a, const Number& c) {
    if (c.is_zero()) return {};
    Sum out = a;
    for (Term& t : out) t.coef = t.coef * c;
    std::erase_if(out, [](const Term& t) { return t.coef.is_zero(); });
    return out;
}

inline Term multiply_terms(const Term& a, const Term& b) {
    std::map<std::string, Factor> merged;
    for (const Term* t : {&a, &b}) {
        for (const Factor& f : t->factors) {
            auto [it, inserted] = merged.emplace(f.key, f);
            if (!inserted) it->second.exponent += f.exponent;
        }
    }
    Term out{a.coef * b.coef, {}, ""};
    for (auto& [k, f] : merged)
        if (f.exponent != 0) out.factors.push_back(std::move(f));
    out.key = term_key(out.factors);
    return out;
}

Expr from_sum(const Sum& s);

inline Sum multiply_sums(const Sum& a, const Sum& b) {
    if (a.empty() || b.empty()) return {};
    if (a.size() * b.size() > kMaxTerms) {
        // Too large to distribute: keep both sides as opaque factors.
        return {multiply_terms(factor_sum(from_sum(a)).front(), factor_sum(from_sum(b)).front())};
    }
    std::map<std::string, Term> merged;
    for (const Term& x : a) {
        for (const Term& y : b) {
            Term t = multiply_terms(x, y);
            auto [it, inserted] = merged.emplace(t.key, t);
            if (!inserted) it->second.coef = it->second.coef + t.coef;
        }
    }
    Sum out;
    for (auto& [k, t] : merged)
        if (!t.coef.is_zero()) out.push_back(std::move(t));
    return out;
}

inline Sum power_sum(const Sum& a, int n) {
    if (n == 0) return constant_sum(Number::integer(1));
    if (a.empty()) return {};
    if (a.size() == 1) {
        Term t = a.front();
        t.coef = t.coef.pow(n);
        for (Factor& f : t.factors) f.exponent *= n;
        t.key = term_key(t.factors);
        return {t};
    }
    Sum r = a;
    for (int i = 1; i < n; ++i) {
        if (r.size() * a.size() > kMaxTerms) return factor_sum(from_sum(a), n);
        r = multiply_sums(r, a);
    }
    return r;
}

inline bool sum_is_constant(const Sum& s) { return s.empty() || (s.size() == 1 && s.front().factors.empty()); }

inline Number sum_constant(const Sum& s) { return s.empty() ? Number::integer(0) : s.front().coef; }

inline Expr term_magnitude(const Term& t, const Number& coef) {
    std::vector<Expr> parts;
    if (!coef.is_one()) parts.push_back(Expr::constant(coef));
    for (const Factor& f : t.factors) parts.push_back(f.exponent == 1 ? f.base : pow(f.base, f.exponent));
    if (parts.empty()) return Expr::constant(coef);
    if (parts.size() == 1) return parts.front();
    return Expr::make(Op::Mul, std::move(parts));
}

inline Expr from_sum(const Sum& s) {
    if (s.empty()) return Expr::integer(0);
    // Non-constant terms in key order, constant term last.
    std::vector<const Term*> order;
    for (const Term& t : s)
        if (!t.factors.empty()) order.push_back(&t);
    for (const Term& t : s)
        if (t.factors.empty()) order.push_back(&t);

    Expr acc;
    bool first = true;
    for (const Term* t : order) {
        bool negative = t->coef.is_negative() && !t->factors.empty();
        Expr mag = term_magnitude(*t, negative ? -t->coef : t->coef);
        if (first) {
            acc = negative ? -mag : mag;
            first = false;
        } else if (negative) {
            acc = acc - mag;
        } else if (acc.op() == Op::Add) {
            std::vector<Expr> args = acc.args();
            args.push_back(mag);
            acc = Expr::make(Op::Add, std::move(args));
        } else {
            acc = acc + mag;
        }
    }
    return acc;
}

inline bool perfect_square(std::int64_t v, std::int64_t& root) {
    if (v < 0) return false;
    auto r = std::int64_t(std::llround(std::sqrt(double(v))));
    for (std::int64_t c = std::max<std::int64_t>(0, r - 1); c <= r + 1; ++c) {
        if (c * c == v) {
            root = c;
            return true;
        }
    }
    return false;
}

// Exact values of functions at exact constants, or numeric folding when the
// argument is already an inexact double. Returns false when nothing folds.
inline bool fold_function(Op op, const Number& a, Number& out) {
    if (a.exact()) {
        if (a.is_zero() && (op == Op::Sin || op == Op::Sqrt)) return out = Number::integer(0), true;
        if (a.is_zero() && (op == Op::Cos || op == Op::Exp)) return out = Number::integer(1), true;
        if (a.is_one() && op == Op::Log) return out = Number::integer(0), true;
        std::int64_t p, q;
        if (op == Op::Sqrt && perfect_square(a.num(), p) && perfect_square(a.den(), q))
            return out = Number::rational(p, q), true;
        return false;
    }
    try {
        double v = apply_function(op, a.value());
        if (!std::isfinite(v)) return false;
        out = Number::real(v);
        return true;
    } catch (const EvalDomainError&) {
        return false;
    }
}

inline Sum normalize(const Expr& e) {
    switch (e.op()) {
        case Op::Const: return constant_sum(e.number());
        case Op::Var: return factor_sum(e);
        case Op::Add: {
            Sum s;
            for (const Expr& a : e.args()) s = add_sums(s, normalize(a));
            return s;
        }
        case Op::Sub: return add_sums(normalize(e.arg(0)), scale_sum(normalize(e.arg(1)), Number::integer(-1)));
        case Op::Neg: return scale_sum(normalize(e.arg(0)), Number::integer(-1));
        case Op::Mul: {
            Sum s = constant_sum(Number::integer(1));
            for (const Expr& a : e.args()) {
                Sum f = normalize(a);
                if (f.empty()) return {};
                s = multiply_sums(s, f);
            }
            return s;
        }
        case Op::Pow: return power_sum(normalize(e.arg(0)), e.exponent());
        case Op::Div: {
            Sum num = normalize(e.arg(0));
            Sum den = normalize(e.arg(1));
            if (sum_is_constant(den)) {
                Number d = sum_constant(den);
                if (!d.is_zero()) return scale_sum(num, Number::integer(1) / d);
            }
            if (num.empty() && !den.empty()) return {};
            if (!den.empty() && from_sum(num).str() == from_sum(den).str()) return constant_sum(Number::integer(1));
            // a/(c*F) = (1/c)*(a/F)
            Number scale = Number::integer(1);
            if (den.size() == 1 && !den.front().coef.is_one()) {
                scale = Number::integer(1) / den.front().coef;
                den = scale_sum(den, scale);
            }
            Expr q = Expr::make(Op::Div, {from_sum(num), from_sum(den)});
            return scale_sum(factor_sum(q), scale);
        }
        default: {
            Sum inner = normalize(e.arg(0));
            if (sum_is_constant(inner)) {
                Number folded;
                if (fold_function(e.op(), sum_constant(inner), folded)) return constant_sum(folded);
            }
            return factor_sum(Expr::make(e.op(), {from_sum(inner)}));
        }
    }
}

}  // namespace detail

inline Expr simplify(const Expr& e) { return detail::from_sum(detail::normalize(e)); }

// ---------------------------------------------------------------------------
// Differentiation

namespace detail {

inline Expr raw_diff(const Expr& e, const std::string& v) {
    switch (e.op()) {
        case Op::Const: return Expr::integer(0);
        case Op::Var: return Expr::integer(e.name() == v ? 1 : 0);
        case Op::Add: {
            std::vector<Expr> parts;
            for (const Expr& a : e.args()) parts.push_back(raw_diff(a, v));
            return Expr::make(Op::Add, std::move(parts));
        }
        case Op::Sub: return raw_diff(e.arg(0), v) - raw_diff(e.arg(1), v);
        case Op::Neg: return -raw_diff(e.arg(0), v);
        case Op::Mul: {
            std::vector<Expr> parts;
            for (std::size_t i = 0; i < e.args().size(); ++i) {
                std::vector<Expr> factors = e.args();
                factors[i] = raw_diff(e.arg(i), v);
                parts.push_back(Expr::make(Op::Mul, std::move(factors)));
            }
            return Expr::make(Op::Add, std::move(parts));
        }
        case Op::Div: {
            const Expr& a = e.arg(0);
            const Expr& b = e.arg(1);
            return (raw_diff(a, v) * b - a * raw_diff(b, v)) / pow(b, 2);
        }
        case Op::Pow: {
            int n = e.exponent();
            if (n == 0) return Expr::integer(0);
            return Expr::integer(n) * pow(e.arg(0), n - 1) * raw_diff(e.arg(0), v);
        }
        case Op::Sin: return cos(e.arg(0)) * raw_diff(e.arg(0), v);
        case Op::Cos: return -(sin(e.arg(0)) * raw_diff(e.arg(0), v));
        case Op::Exp: return e * raw_diff(e.arg(0), v);
        case Op::Log: return raw_diff(e.arg(0), v) / e.arg(0);
        case Op::Sqrt: return raw_diff(e.arg(0), v) / (Expr::integer(2) * e);
    }
    return Expr::integer(0);
}

}  // namespace detail

// Exact partial derivative with respect to the named variable, simplified.
inline Expr diff(const Expr& e, const std::string& v) { return simplify(detail::raw_diff(e, v)); }

inline Expr substitute(const Expr& e, const std::map<std::string, Expr>& replacements) {
    if (e.op() == Op::Var) {
        auto it = replacements.find(e.name());
        return it == replacements.end() ? e : it->second;
    }
    if (e.op() == Op::Const) return e;
    std::vector<Expr> args;
    args.reserve(e.args().size());
    for (const Expr& a : e.args()) args.push_back(substitute(a, replacements));
    return Expr::make(e.op(), std::move(args), e.exponent());
}

// ---------------------------------------------------------------------------
// Parsing
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := ('-')? atom ('^' INT)?
//   atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

namespace detail {

class Parser {
public:
    Parser(std::string_view text, const std::set<std::string>& vars) : text_(text), vars_(vars) {}

    Expr parse() {
        Expr e = expr();
        skip();
        if (pos_ != text_.size()) throw SyntaxError(pos_, "operator or end of input");
        return e;
    }

private:
    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr expr() {
        Expr acc = term();
        bool acc_grouped = grouped_;
        for (;;) {
            if (accept('+')) {
                Expr rhs = term();
                if (acc.op() == Op::Add && !acc_grouped) {
                    std::vector<Expr> args = acc.args();
                    args.push_back(rhs);
                    acc = Expr::make(Op::Add, std::move(args));
                } else {
                    acc = acc + rhs;
                }
                acc_grouped = grouped_ = false;
            } else if (accept('-')) {
                acc = acc - term();
                acc_grouped = grouped_ = false;
            } else {
                return acc;
            }
        }
    }

    Expr term() {
        Expr acc = factor();
        bool acc_grouped = grouped_;
        for (;;) {
            if (accept('*')) {
                Expr rhs = factor();
                if (acc.op() == Op::Mul && !acc_grouped) {
                    std::vector<Expr> args = acc.args();
                    args.push_back(rhs);
                    acc = Expr::make(Op::Mul, std::move(args));
                } else {
                    acc = acc * rhs;
                }
                acc_grouped = grouped_ = false;
            } else if (accept('/')) {
                acc = acc / factor();
                acc_grouped = grouped_ = false;
            } else {
                return acc;
            }
        }
    }

    Expr factor() {
        bool negate = accept('-');
        Expr a = atom();
        if (accept('^')) {
            skip();
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (start == pos_) throw SyntaxError(pos_, "integer exponent");
            if (pos_ - start > 6) throw SyntaxError(start, "exponent below 1000000");
            a = pow(a, std::stoi(std::string(text_.substr(start, pos_ - start))));
            grouped_ = false;
        }
        if (negate) {
            a = -a;
            grouped_ = false;
        }
        return a;
    }

    Expr atom() {
        skip();
        grouped_ = false;
        if (pos_ >= text_.size()) throw SyntaxError(pos_, "number, name or '('");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            if (!accept(')')) throw SyntaxError(pos_, "')'");
            grouped_ = true;
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            std::string name(text_.substr(start, pos_ - start));
            skip();
            if (pos_ < text_.size() && text_[pos_] == '(') {
                static const std::map<std::string, Op> functions = {
                    {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp}, {"log", Op::Log}, {"sqrt", Op::Sqrt}};
                auto it = functions.find(name);
                if (it == functions.end()) throw SyntaxError(start, "function name (sin, cos, exp, log, sqrt)");
                ++pos_;
                Expr arg = expr();
                if (!accept(')')) throw SyntaxError(pos_, "')'");
                return Expr::make(it->second, {arg});
            }
            if (!vars_.contains(name)) throw UnknownVariable(name);
            return Expr::var(name);
        }
        throw SyntaxError(pos_, "number, name or '('");
    }

    Expr number() {
        std::size_t start = pos_;
        std::size_t int_digits = 0, frac_digits = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_, ++int_digits;
        bool has_exp = false;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_, ++frac_digits;
        }
        if (int_digits + frac_digits == 0) throw SyntaxError(start, "number");
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            std::size_t exp_start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (exp_start == pos_) throw SyntaxError(save, "exponent digits");
            has_exp = true;
        }
        std::string literal(text_.substr(start, pos_ - start));
        if (!has_exp && int_digits + frac_digits <= 18) {
            std::string digits;
            for (char ch : literal)
                if (ch != '.') digits += ch;
            std::int64_t num = digits.empty() ? 0 : std::stoll(digits);
            std::int64_t den = 1;
            for (std::size_t i = 0; i < frac_digits; ++i) den *= 10;
            return Expr::constant(Number::rational(num, den));
        }
        return Expr::constant(Number::real(std::strtod(literal.c_str(), nullptr)));
    }

    std::string_view text_;
    const std::set<std::string>& vars_;
    std::size_t pos_ = 0;
    bool grouped_ = false;  // last atom was parenthesized; keeps (a*b)*c nested
};

}  // namespace detail

inline Expr parse(std::string_view text, const std::set<std::string>& allowed_vars) {
    return detail::Parser(text, allowed_vars).parse();
}

// ---------------------------------------------------------------------------
// Zero testing

struct Interval {
    double lo = -2.0;
    double hi = 2.0;
};

struct ZeroTestOptions {
    std::size_t samples = 200;
    double tol = 1e-9;
    Interval default_box{};
    std::map<std::string, Interval> box;
    std::uint64_t seed = 0x6a657463;
    std::size_t max_retries = 100;
    bool symbolic_only = false;  // skip the sampled fallback
};

enum class ZeroKind { Symbolic, Numeric, NonZero };

inline const char* to_string(ZeroKind k) {
    switch (k) {
        case ZeroKind::Symbolic: return "SymbolicZero";
        case ZeroKind::Numeric: return "NumericZero";
        default: return "NonZero";
    }
}

struct ZeroVerdict {
    ZeroKind kind = ZeroKind::Symbolic;
    Binding witness;  // set for NonZero when a sample exhibited |e| >= tol
    double witness_value = 0.0;
    bool is_zero() const { return kind != ZeroKind::NonZero; }
};

// Tri-state identical-vanishing test: literal 0 after simplify, else |e| < tol
// at every uniform sample in the box, else the first offending sample.
inline ZeroVerdict is_zero(const Expr& e, const ZeroTestOptions& opt = {}) {
    Expr s = simplify(e);
    if (s.is_zero_literal()) return {ZeroKind::Symbolic, {}, 0.0};
    ZeroVerdict v;
    v.kind = ZeroKind::NonZero;
    if (opt.symbolic_only) return v;  // no witness: not proven zero

    std::set<std::string> vars = free_variables(s);
    std::mt19937_64 rng(opt.seed);
    std::size_t samples = std::max<std::size_t>(opt.samples, 1);
    for (std::size_t i = 0; i < samples; ++i) {
        for (std::size_t attempt = 0;; ++attempt) {
            Binding at;
            for (const std::string& name : vars) {
                auto it = opt.box.find(name);
                Interval iv = it == opt.box.end() ? opt.default_box : it->second;
                at[name] = std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng);
            }
            try {
                double val = eval(s, at);
                if (!std::isfinite(val)) throw EvalDomainError("non-finite value");
                if (!(std::abs(val) < opt.tol)) {
                    v.witness = std::move(at);
                    v.witness_value = val;
                    return v;
                }
                break;
            } catch (const EvalDomainError&) {
                if (attempt + 1 >= opt.max_retries)
                    throw EvalDomainError("zero test: no evaluable sample point found after " +
                                          std::to_string(opt.max_retries) + " attempts");
            }
        }
    }
    v.kind = ZeroKind::Numeric;
    return v;
}

inline ZeroVerdict equivalent(const Expr& a, const Expr& b, const ZeroTestOptions& opt = {}) {
    return is_zero(a - b, opt);
}

}  // namespace jetc
