#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cwp/util.hpp"

namespace cwp {

// Closed-form expression over named coordinates: arithmetic (+ - * / ^,
// unary minus), sin, cos, exp, log, pow, sqrt, numeric literals and the
// constant pi. Parse errors carry line/column information.
class Expr {
public:
    static Expr parse(const std::string& text, const std::vector<std::string>& variables);

    double eval(std::span<const double> vars) const;

    Expr();
    Expr(Expr&&) noexcept;
    Expr& operator=(Expr&&) noexcept;
    Expr(const Expr&);
    Expr& operator=(const Expr&);
    ~Expr();

    struct Node; // exposed for the parser implementation

private:
    std::shared_ptr<const Node> root_;
};

struct ExprParseError : DomainError {
    ExprParseError(const std::string& msg, int line, int col)
        : DomainError(msg + " at line " + std::to_string(line) + ", column " + std::to_string(col)),
          line(line), col(col) {}
    int line;
    int col;
};

} // namespace cwp
