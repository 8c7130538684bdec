#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "endo/errors.hpp"

namespace endo::expr {

/// Thrown by parse(); `offset` is the byte position of the offending token.
struct ParseError : Error {
    std::size_t offset;
    ParseError(std::string msg, std::size_t off)
        : Error(std::move(msg) + " (at offset " + std::to_string(off) + ")"), offset(off) {}
};

/// Thrown by eval() on unbound variables, domain errors, or non-finite results.
struct EvalError : Error {
    using Error::Error;
};

enum class BinOp : std::uint8_t { Add, Sub, Mul, Div, Pow };
enum class Cmp : std::uint8_t { Lt, Le, Gt, Ge };
enum class Fun : std::uint8_t { Exp, Log, Sin, Cos, Sqrt, Abs, Tanh, Min, Max };

/// Arithmetic expression over named real variables.
///
/// Grammar: literals, declared variables, binary + - * / ^, unary -,
/// functions exp log sin cos sqrt abs tanh min max, and a piecewise
/// guard ite(lhs CMP rhs, then, else) with CMP one of < <= > >=.
///
/// Immutable after parse; eval is pure and reentrant, so a single
/// Expression may be evaluated concurrently from many workers.
class Expression {
public:
    struct Node {
        enum class Kind : std::uint8_t { Lit, Var, Bin, Neg, Call1, Call2, Ite } kind;
        double value = 0.0;   // Lit
        int var = -1;         // Var: index into vars()
        std::uint8_t op = 0;  // BinOp / Fun / Cmp (for Ite)
        int a = -1, b = -1, c = -1;  // child node indices
    };

    Expression() = default;

    const std::vector<std::string>& vars() const { return vars_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    int root() const { return root_; }
    bool empty() const { return nodes_.empty(); }

    /// Evaluates with `values[i]` bound to `vars()[i]`.
    double eval(std::span<const double> values) const;

    /// Convenience overload binding variables by name.
    double eval(const std::vector<std::pair<std::string, double>>& bindings) const;

    /// True if the trees are structurally identical (same shape, ops,
    /// literals, and variable names).
    bool same_tree(const Expression& other) const;

    /// True if the variable actually occurs in the tree.
    bool uses(std::string_view var) const;

    std::string print() const;

    // Programmatic constructors, used where expressions are built rather
    // than parsed (fixtures, utility marginals).
    static Expression lit(double v);
    static Expression var(const std::string& name, const std::vector<std::string>& allowed);
    static Expression bin(BinOp op, Expression lhs, Expression rhs);
    static Expression neg(Expression e);
    static Expression call(Fun f, Expression arg);
    static Expression call(Fun f, Expression a, Expression b);
    static Expression ite(Cmp cmp, Expression l, Expression r, Expression then_e, Expression else_e);

    /// Replaces every occurrence of `var_name` by `replacement` and remaps
    /// the result onto `result_vars`. Throws if a remaining variable is not
    /// in `result_vars`.
    Expression substitute(const std::string& var_name, const Expression& replacement,
                          const std::vector<std::string>& result_vars) const;

    /// Low-level assembly from prebuilt nodes (the programmatic builders and
    /// substitution funnel through this).
    static Expression from_parts(std::vector<Node> nodes, std::vector<std::string> vars, int root);

private:
    friend Expression parse(std::string_view, const std::vector<std::string>&);
    friend class Parser;

    int add(Node n) { nodes_.push_back(n); return static_cast<int>(nodes_.size()) - 1; }
    void finalize();  // computes the postorder evaluation schedule
    static Expression merge(const Expression& target_vars_holder, const Expression& sub);

    std::vector<Node> nodes_;
    std::vector<std::string> vars_;
    int root_ = -1;
    std::vector<int> postorder_;
};

/// Parses `src` against the declared variable list. Unknown identifiers,
/// unknown functions, and malformed syntax raise ParseError with the byte
/// offset of the problem.
Expression parse(std::string_view src, const std::vector<std::string>& allowed_vars);

/// Central finite difference d(e)/d(var) at `point` (aligned with e.vars()).
/// Step defaults to 1e-5 * max(1, |point[var]|) when h <= 0.
double diff_fd(const Expression& e, int var_index, std::span<const double> point, double h = 0.0);
double diff_fd(const Expression& e, const std::string& var, std::span<const double> point, double h = 0.0);

/// Second central difference along one or two variables (equal vars give
/// d2/dv2, distinct vars the 4-point cross stencil).
double diff2_fd(const Expression& e, int var_i, int var_j, std::span<const double> point, double h = 0.0);

}  // namespace endo::expr
