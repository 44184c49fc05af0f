#include "cwp/expr.hpp"

#include <cctype>
#include <cmath>
#include <map>

namespace cwp {

struct Expr::Node {
    enum class Kind { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Call1, Call2 };
    Kind kind;
    double value = 0.0;                 // Const
    int var = -1;                       // Var
    double (*fn1)(double) = nullptr;    // Call1
    double (*fn2)(double, double) = nullptr; // Call2
    std::shared_ptr<const Node> a, b;

    double eval(std::span<const double> v) const {
        switch (kind) {
            case Kind::Const: return value;
            case Kind::Var: return v[static_cast<std::size_t>(var)];
            case Kind::Add: return a->eval(v) + b->eval(v);
            case Kind::Sub: return a->eval(v) - b->eval(v);
            case Kind::Mul: return a->eval(v) * b->eval(v);
            case Kind::Div: return a->eval(v) / b->eval(v);
            case Kind::Pow: return std::pow(a->eval(v), b->eval(v));
            case Kind::Neg: return -a->eval(v);
            case Kind::Call1: return fn1(a->eval(v));
            case Kind::Call2: return fn2(a->eval(v), b->eval(v));
        }
        return 0.0;
    }
};

Expr::Expr() = default;
Expr::Expr(Expr&&) noexcept = default;
Expr& Expr::operator=(Expr&&) noexcept = default;
Expr::Expr(const Expr&) = default;
Expr& Expr::operator=(const Expr&) = default;
Expr::~Expr() = default;

double Expr::eval(std::span<const double> vars) const {
    if (!root_) throw DomainError("Expr: evaluating empty expression");
    return root_->eval(vars);
}

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

struct Parser {
    const std::string& s;
    const std::vector<std::string>& vars;
    std::size_t pos = 0;
    int line = 1;
    int col = 1;

    [[noreturn]] void fail(const std::string& msg) const { throw ExprParseError(msg, line, col); }

    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }
    void advance() {
        if (pos < s.size()) {
            if (s[pos] == '\n') { ++line; col = 1; } else { ++col; }
            ++pos;
        }
    }
    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) advance();
    }
    bool consume(char c) {
        if (peek() == c) { advance(); return true; }
        return false;
    }

    static NodePtr mk(Expr::Node n) { return std::make_shared<const Expr::Node>(std::move(n)); }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            if (consume('+')) {
                Expr::Node n; n.kind = Expr::Node::Kind::Add; n.a = lhs; n.b = parse_term();
                lhs = mk(std::move(n));
            } else if (consume('-')) {
                Expr::Node n; n.kind = Expr::Node::Kind::Sub; n.a = lhs; n.b = parse_term();
                lhs = mk(std::move(n));
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (consume('*')) {
                Expr::Node n; n.kind = Expr::Node::Kind::Mul; n.a = lhs; n.b = parse_unary();
                lhs = mk(std::move(n));
            } else if (consume('/')) {
                Expr::Node n; n.kind = Expr::Node::Kind::Div; n.a = lhs; n.b = parse_unary();
                lhs = mk(std::move(n));
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_unary() {
        if (consume('-')) {
            Expr::Node n; n.kind = Expr::Node::Kind::Neg; n.a = parse_unary();
            return mk(std::move(n));
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (consume('^')) {
            Expr::Node n; n.kind = Expr::Node::Kind::Pow; n.a = base; n.b = parse_unary();
            return mk(std::move(n));
        }
        return base;
    }

    NodePtr parse_atom() {
        char c = peek();
        if (c == '(') {
            advance();
            NodePtr e = parse_expr();
            if (!consume(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        fail("unexpected character");
    }

    NodePtr parse_number() {
        skip_ws();
        std::size_t start = pos;
        while (pos < s.size() &&
               (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.' || s[pos] == 'e' ||
                s[pos] == 'E' ||
                ((s[pos] == '+' || s[pos] == '-') && pos > start && (s[pos - 1] == 'e' || s[pos - 1] == 'E'))))
            advance();
        Expr::Node n;
        n.kind = Expr::Node::Kind::Const;
        try {
            n.value = std::stod(s.substr(start, pos - start));
        } catch (const std::exception&) {
            fail("malformed number");
        }
        return mk(std::move(n));
    }

    NodePtr parse_ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
            advance();
        std::string name = s.substr(start, pos - start);

        static const std::map<std::string, double (*)(double)> fns1 = {
            {"sin", [](double x) { return std::sin(x); }},
            {"cos", [](double x) { return std::cos(x); }},
            {"exp", [](double x) { return std::exp(x); }},
            {"log", [](double x) { return std::log(x); }},
            {"sqrt", [](double x) { return std::sqrt(x); }},
        };

        if (peek() == '(') {
            if (name == "pow") {
                advance();
                Expr::Node n;
                n.kind = Expr::Node::Kind::Call2;
                n.fn2 = [](double x, double y) { return std::pow(x, y); };
                n.a = parse_expr();
                if (!consume(',')) fail("pow expects two arguments");
                n.b = parse_expr();
                if (!consume(')')) fail("expected ')'");
                return mk(std::move(n));
            }
            auto it = fns1.find(name);
            if (it == fns1.end()) fail("unknown function '" + name + "'");
            advance();
            Expr::Node n;
            n.kind = Expr::Node::Kind::Call1;
            n.fn1 = it->second;
            n.a = parse_expr();
            if (!consume(')')) fail("expected ')'");
            return mk(std::move(n));
        }

        if (name == "pi") {
            Expr::Node n; n.kind = Expr::Node::Kind::Const; n.value = 3.14159265358979323846;
            return mk(std::move(n));
        }
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (vars[i] == name) {
                Expr::Node n; n.kind = Expr::Node::Kind::Var; n.var = static_cast<int>(i);
                return mk(std::move(n));
            }
        }
        fail("unknown identifier '" + name + "'");
    }
};

} // namespace

Expr Expr::parse(const std::string& text, const std::vector<std::string>& variables) {
    Parser p{text, variables};
    NodePtr root = p.parse_expr();
    if (p.peek() != '\0') p.fail("trailing input");
    Expr e;
    e.root_ = root;
    return e;
}

} // namespace cwp
