#include "endo/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

namespace endo::expr {

namespace {

const std::map<std::string, Fun, std::less<>> kFunctions = {
    {"exp", Fun::Exp}, {"log", Fun::Log}, {"sin", Fun::Sin},
    {"cos", Fun::Cos}, {"sqrt", Fun::Sqrt}, {"abs", Fun::Abs},
    {"tanh", Fun::Tanh}, {"min", Fun::Min}, {"max", Fun::Max},
};

bool is_binary_fun(Fun f) { return f == Fun::Min || f == Fun::Max; }

double apply_fun(Fun f, double x, double y) {
    switch (f) {
        case Fun::Exp: return std::exp(x);
        case Fun::Log:
            if (x <= 0.0) throw EvalError("log of non-positive value");
            return std::log(x);
        case Fun::Sin: return std::sin(x);
        case Fun::Cos: return std::cos(x);
        case Fun::Sqrt:
            if (x < 0.0) throw EvalError("sqrt of negative value");
            return std::sqrt(x);
        case Fun::Abs: return std::fabs(x);
        case Fun::Tanh: return std::tanh(x);
        case Fun::Min: return std::min(x, y);
        case Fun::Max: return std::max(x, y);
    }
    throw EvalError("unknown function");
}

double apply_bin(BinOp op, double l, double r) {
    switch (op) {
        case BinOp::Add: return l + r;
        case BinOp::Sub: return l - r;
        case BinOp::Mul: return l * r;
        case BinOp::Div:
            if (r == 0.0) throw EvalError("division by zero");
            return l / r;
        case BinOp::Pow: {
            double v = std::pow(l, r);
            if (std::isnan(v)) throw EvalError("pow domain error");
            return v;
        }
    }
    throw EvalError("unknown operator");
}

bool cmp_holds(Cmp c, double l, double r) {
    switch (c) {
        case Cmp::Lt: return l < r;
        case Cmp::Le: return l <= r;
        case Cmp::Gt: return l > r;
        case Cmp::Ge: return l >= r;
    }
    return false;
}

const char* cmp_str(Cmp c) {
    switch (c) {
        case Cmp::Lt: return "<";
        case Cmp::Le: return "<=";
        case Cmp::Gt: return ">";
        case Cmp::Ge: return ">=";
    }
    return "?";
}

const char* fun_str(Fun f) {
    switch (f) {
        case Fun::Exp: return "exp";
        case Fun::Log: return "log";
        case Fun::Sin: return "sin";
        case Fun::Cos: return "cos";
        case Fun::Sqrt: return "sqrt";
        case Fun::Abs: return "abs";
        case Fun::Tanh: return "tanh";
        case Fun::Min: return "min";
        case Fun::Max: return "max";
    }
    return "?";
}

}  // namespace

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class Parser {
public:
    Parser(std::string_view src, const std::vector<std::string>& vars) : src_(src) {
        expr_.vars_ = vars;
    }

    Expression run() {
        expr_.root_ = parse_sum();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected trailing input");
        expr_.finalize();
        return std::move(expr_);
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    bool consume(char c) {
        if (peek() == c) { ++pos_; return true; }
        return false;
    }

    void expect(char c, const char* what) {
        if (!consume(c)) fail(std::string("expected '") + c + "' " + what);
    }

    int parse_sum() {
        int lhs = parse_term();
        for (;;) {
            char c = peek();
            if (c == '+' || c == '-') {
                ++pos_;
                int rhs = parse_term();
                lhs = add_bin(c == '+' ? BinOp::Add : BinOp::Sub, lhs, rhs);
            } else {
                return lhs;
            }
        }
    }

    int parse_term() {
        int lhs = parse_unary();
        for (;;) {
            char c = peek();
            if (c == '*' || c == '/') {
                ++pos_;
                int rhs = parse_unary();
                lhs = add_bin(c == '*' ? BinOp::Mul : BinOp::Div, lhs, rhs);
            } else {
                return lhs;
            }
        }
    }

    int parse_unary() {
        if (consume('-')) {
            int child = parse_unary();
            Expression::Node n;
            n.kind = Expression::Node::Kind::Neg;
            n.a = child;
            return expr_.add(n);
        }
        return parse_power();
    }

    int parse_power() {
        int base = parse_atom();
        if (peek() == '^') {
            ++pos_;
            int exp = parse_unary();  // right-associative, binds tighter than unary minus on the left
            return add_bin(BinOp::Pow, base, exp);
        }
        return base;
    }

    int parse_atom() {
        char c = peek();
        if (c == '(') {
            ++pos_;
            int inner = parse_sum();
            expect(')', "to close parenthesis");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        if (c == '\0') fail("unexpected end of input");
        fail(std::string("unexpected character '") + c + "'");
    }

    int parse_number() {
        skip_ws();
        const char* begin = src_.data() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        Expression::Node n;
        n.kind = Expression::Node::Kind::Lit;
        n.value = v;
        return expr_.add(n);
    }

    int parse_ident() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string name(src_.substr(start, pos_ - start));

        if (peek() == '(') {
            if (name == "ite") return parse_ite();
            auto it = kFunctions.find(name);
            if (it == kFunctions.end()) {
                pos_ = start;
                fail("unknown function '" + name + "'");
            }
            ++pos_;  // '('
            int a = parse_sum();
            int b = -1;
            if (is_binary_fun(it->second)) {
                expect(',', "between function arguments");
                b = parse_sum();
            }
            expect(')', "to close function call");
            Expression::Node n;
            n.kind = is_binary_fun(it->second) ? Expression::Node::Kind::Call2
                                               : Expression::Node::Kind::Call1;
            n.op = static_cast<std::uint8_t>(it->second);
            n.a = a;
            n.b = b;
            return expr_.add(n);
        }

        auto vit = std::find(expr_.vars_.begin(), expr_.vars_.end(), name);
        if (vit == expr_.vars_.end()) {
            pos_ = start;
            fail("unknown variable '" + name + "'");
        }
        Expression::Node n;
        n.kind = Expression::Node::Kind::Var;
        n.var = static_cast<int>(vit - expr_.vars_.begin());
        return expr_.add(n);
    }

    int parse_ite() {
        expect('(', "after ite");
        int lhs = parse_sum();
        Cmp cmp;
        skip_ws();
        if (consume('<')) cmp = consume('=') ? Cmp::Le : Cmp::Lt;
        else if (consume('>')) cmp = consume('=') ? Cmp::Ge : Cmp::Gt;
        else fail("expected comparison in ite condition");
        int rhs = parse_sum();
        expect(',', "after ite condition");
        int then_e = parse_sum();
        expect(',', "between ite branches");
        int else_e = parse_sum();
        expect(')', "to close ite");
        Expression::Node n;
        n.kind = Expression::Node::Kind::Ite;
        n.op = static_cast<std::uint8_t>(cmp);
        n.a = then_e;
        n.b = else_e;
        n.c = add_cmp(cmp, lhs, rhs);
        return expr_.add(n);
    }

    // The comparison itself is stored as a Bin node with the Cmp packed in
    // `op`; it is only ever referenced from an Ite's `c` slot.
    int add_cmp(Cmp, int lhs, int rhs) {
        Expression::Node n;
        n.kind = Expression::Node::Kind::Bin;
        n.op = 0xFF;  // sentinel: children of an Ite condition
        n.a = lhs;
        n.b = rhs;
        return expr_.add(n);
    }

    int add_bin(BinOp op, int lhs, int rhs) {
        Expression::Node n;
        n.kind = Expression::Node::Kind::Bin;
        n.op = static_cast<std::uint8_t>(op);
        n.a = lhs;
        n.b = rhs;
        return expr_.add(n);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Expression expr_;
};

Expression parse(std::string_view src, const std::vector<std::string>& allowed_vars) {
    return Parser(src, allowed_vars).run();
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

void Expression::finalize() {
    // Nothing to precompute; evaluation walks the tree directly so that the
    // untaken branch of an ite guard is never evaluated (piecewise
    // definitions divide by zero off their support).
    postorder_.clear();
}

namespace {
double eval_node(const std::vector<Expression::Node>& nodes, int idx,
                 std::span<const double> values) {
    const auto& n = nodes[static_cast<std::size_t>(idx)];
    using K = Expression::Node::Kind;
    switch (n.kind) {
        case K::Lit: return n.value;
        case K::Var: return values[static_cast<std::size_t>(n.var)];
        case K::Neg: return -eval_node(nodes, n.a, values);
        case K::Bin:
            return apply_bin(static_cast<BinOp>(n.op), eval_node(nodes, n.a, values),
                             eval_node(nodes, n.b, values));
        case K::Call1:
            return apply_fun(static_cast<Fun>(n.op), eval_node(nodes, n.a, values), 0.0);
        case K::Call2:
            return apply_fun(static_cast<Fun>(n.op), eval_node(nodes, n.a, values),
                             eval_node(nodes, n.b, values));
        case K::Ite: {
            const auto& cond = nodes[static_cast<std::size_t>(n.c)];
            bool holds = cmp_holds(static_cast<Cmp>(n.op), eval_node(nodes, cond.a, values),
                                   eval_node(nodes, cond.b, values));
            return eval_node(nodes, holds ? n.a : n.b, values);
        }
    }
    throw EvalError("corrupt expression node");
}
}  // namespace

double Expression::eval(std::span<const double> values) const {
    if (root_ < 0) throw EvalError("empty expression");
    if (values.size() < vars_.size()) throw EvalError("unbound variable in evaluation");
    double v = eval_node(nodes_, root_, values);
    if (!std::isfinite(v)) throw EvalError("non-finite result");
    return v;
}

double Expression::eval(const std::vector<std::pair<std::string, double>>& bindings) const {
    std::vector<double> values(vars_.size());
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        bool found = false;
        for (const auto& [name, v] : bindings) {
            if (name == vars_[i]) { values[i] = v; found = true; break; }
        }
        if (!found && uses(vars_[i])) throw EvalError("unbound variable '" + vars_[i] + "'");
    }
    return eval(values);
}

bool Expression::uses(std::string_view var) const {
    auto it = std::find(vars_.begin(), vars_.end(), var);
    if (it == vars_.end()) return false;
    int idx = static_cast<int>(it - vars_.begin());
    for (const Node& n : nodes_)
        if (n.kind == Node::Kind::Var && n.var == idx) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Structural identity and printing
// ---------------------------------------------------------------------------

namespace {
bool same_node(const Expression& ea, const Expression& eb, int ia, int ib) {
    if (ia < 0 || ib < 0) return ia == ib;
    const auto& a = ea.nodes()[static_cast<std::size_t>(ia)];
    const auto& b = eb.nodes()[static_cast<std::size_t>(ib)];
    if (a.kind != b.kind || a.op != b.op) return false;
    using K = Expression::Node::Kind;
    switch (a.kind) {
        case K::Lit: return a.value == b.value;
        case K::Var:
            return ea.vars()[static_cast<std::size_t>(a.var)] ==
                   eb.vars()[static_cast<std::size_t>(b.var)];
        default:
            return same_node(ea, eb, a.a, b.a) && same_node(ea, eb, a.b, b.b) &&
                   same_node(ea, eb, a.c, b.c);
    }
}
}  // namespace

bool Expression::same_tree(const Expression& other) const {
    return same_node(*this, other, root_, other.root_);
}

namespace {

int precedence_of(const Expression::Node& n) {
    using K = Expression::Node::Kind;
    switch (n.kind) {
        case K::Lit:
        case K::Var:
        case K::Call1:
        case K::Call2:
        case K::Ite: return 100;
        case K::Neg: return 2;
        case K::Bin:
            switch (static_cast<BinOp>(n.op)) {
                case BinOp::Add:
                case BinOp::Sub: return 1;
                case BinOp::Mul:
                case BinOp::Div: return 2;
                case BinOp::Pow: return 3;
            }
    }
    return 0;
}

void print_node(const Expression& e, int idx, std::ostream& os, int parent_prec, bool right_side) {
    const auto& n = e.nodes()[static_cast<std::size_t>(idx)];
    using K = Expression::Node::Kind;
    int prec = precedence_of(n);
    bool parens = prec < parent_prec || (prec == parent_prec && right_side && prec < 100);
    switch (n.kind) {
        case K::Lit: {
            std::ostringstream tmp;
            tmp.precision(17);
            tmp << n.value;
            std::string s = tmp.str();
            if (n.value < 0) { os << '(' << s << ')'; }
            else os << s;
            break;
        }
        case K::Var:
            os << e.vars()[static_cast<std::size_t>(n.var)];
            break;
        case K::Neg:
            if (parens) os << '(';
            os << '-';
            print_node(e, n.a, os, 3, true);
            if (parens) os << ')';
            break;
        case K::Bin: {
            const char* ops;
            switch (static_cast<BinOp>(n.op)) {
                case BinOp::Add: ops = " + "; break;
                case BinOp::Sub: ops = " - "; break;
                case BinOp::Mul: ops = "*"; break;
                case BinOp::Div: ops = "/"; break;
                case BinOp::Pow: ops = "^"; break;
                default: ops = "?"; break;
            }
            if (parens) os << '(';
            bool pow = static_cast<BinOp>(n.op) == BinOp::Pow;
            // Pow is right-associative; everything else left-associative.
            print_node(e, n.a, os, pow ? prec + 1 : prec, false);
            os << ops;
            print_node(e, n.b, os, pow ? prec : prec + 1, true);
            if (parens) os << ')';
            break;
        }
        case K::Call1:
            os << fun_str(static_cast<Fun>(n.op)) << '(';
            print_node(e, n.a, os, 0, false);
            os << ')';
            break;
        case K::Call2:
            os << fun_str(static_cast<Fun>(n.op)) << '(';
            print_node(e, n.a, os, 0, false);
            os << ", ";
            print_node(e, n.b, os, 0, false);
            os << ')';
            break;
        case K::Ite: {
            const auto& cond = e.nodes()[static_cast<std::size_t>(n.c)];
            os << "ite(";
            print_node(e, cond.a, os, 0, false);
            os << ' ' << cmp_str(static_cast<Cmp>(n.op)) << ' ';
            print_node(e, cond.b, os, 0, false);
            os << ", ";
            print_node(e, n.a, os, 0, false);
            os << ", ";
            print_node(e, n.b, os, 0, false);
            os << ')';
            break;
        }
    }
}

}  // namespace

std::string Expression::print() const {
    if (root_ < 0) return "";
    std::ostringstream os;
    print_node(*this, root_, os, 0, false);
    return os.str();
}

// ---------------------------------------------------------------------------
// Builders and substitution
// ---------------------------------------------------------------------------

Expression Expression::lit(double v) {
    Expression e;
    Node n;
    n.kind = Node::Kind::Lit;
    n.value = v;
    e.root_ = e.add(n);
    e.finalize();
    return e;
}

Expression Expression::var(const std::string& name, const std::vector<std::string>& allowed) {
    Expression e;
    e.vars_ = allowed;
    auto it = std::find(allowed.begin(), allowed.end(), name);
    if (it == allowed.end()) throw ParseError("unknown variable '" + name + "'", 0);
    Node n;
    n.kind = Node::Kind::Var;
    n.var = static_cast<int>(it - allowed.begin());
    e.root_ = e.add(n);
    e.finalize();
    return e;
}

namespace {
// Copies `src` subtree rooted at `idx` into `dst`, remapping variable
// indices through `var_map`; returns the new root index.
int graft(Expression::Node* /*unused*/, const Expression& src, int idx,
          std::vector<Expression::Node>& dst_nodes, const std::vector<int>& var_map) {
    if (idx < 0) return -1;
    const auto& n = src.nodes()[static_cast<std::size_t>(idx)];
    Expression::Node copy = n;
    copy.a = graft(nullptr, src, n.a, dst_nodes, var_map);
    copy.b = graft(nullptr, src, n.b, dst_nodes, var_map);
    copy.c = graft(nullptr, src, n.c, dst_nodes, var_map);
    if (copy.kind == Expression::Node::Kind::Var)
        copy.var = var_map[static_cast<std::size_t>(n.var)];
    dst_nodes.push_back(copy);
    return static_cast<int>(dst_nodes.size()) - 1;
}

std::vector<int> map_vars(const std::vector<std::string>& from, std::vector<std::string>& into) {
    std::vector<int> m(from.size(), -1);
    for (std::size_t i = 0; i < from.size(); ++i) {
        auto it = std::find(into.begin(), into.end(), from[i]);
        if (it == into.end()) {
            into.push_back(from[i]);
            m[i] = static_cast<int>(into.size()) - 1;
        } else {
            m[i] = static_cast<int>(it - into.begin());
        }
    }
    return m;
}

class TreeBuilder {
public:
    std::vector<Expression::Node> nodes;
    std::vector<std::string> vars;
};

Expression assemble(TreeBuilder&& b, int root) {
    return Expression::from_parts(std::move(b.nodes), std::move(b.vars), root);
}
}  // namespace

Expression Expression::from_parts(std::vector<Node> nodes, std::vector<std::string> vars, int root) {
    Expression e;
    e.nodes_ = std::move(nodes);
    e.vars_ = std::move(vars);
    e.root_ = root;
    e.finalize();
    return e;
}

Expression Expression::bin(BinOp op, Expression lhs, Expression rhs) {
    TreeBuilder b;
    b.vars = lhs.vars_;
    auto lmap = map_vars(lhs.vars_, b.vars);
    int a = graft(nullptr, lhs, lhs.root_, b.nodes, lmap);
    auto rmap = map_vars(rhs.vars_, b.vars);
    int bb = graft(nullptr, rhs, rhs.root_, b.nodes, rmap);
    Node n;
    n.kind = Node::Kind::Bin;
    n.op = static_cast<std::uint8_t>(op);
    n.a = a;
    n.b = bb;
    b.nodes.push_back(n);
    return assemble(std::move(b), static_cast<int>(b.nodes.size()) - 1);
}

Expression Expression::neg(Expression e) {
    TreeBuilder b;
    b.vars = e.vars_;
    auto m = map_vars(e.vars_, b.vars);
    int a = graft(nullptr, e, e.root_, b.nodes, m);
    Node n;
    n.kind = Node::Kind::Neg;
    n.a = a;
    b.nodes.push_back(n);
    return assemble(std::move(b), static_cast<int>(b.nodes.size()) - 1);
}

Expression Expression::call(Fun f, Expression arg) {
    TreeBuilder b;
    b.vars = arg.vars_;
    auto m = map_vars(arg.vars_, b.vars);
    int a = graft(nullptr, arg, arg.root_, b.nodes, m);
    Node n;
    n.kind = Node::Kind::Call1;
    n.op = static_cast<std::uint8_t>(f);
    n.a = a;
    b.nodes.push_back(n);
    return assemble(std::move(b), static_cast<int>(b.nodes.size()) - 1);
}

Expression Expression::call(Fun f, Expression x, Expression y) {
    TreeBuilder b;
    b.vars = x.vars_;
    auto xm = map_vars(x.vars_, b.vars);
    int a = graft(nullptr, x, x.root_, b.nodes, xm);
    auto ym = map_vars(y.vars_, b.vars);
    int bb = graft(nullptr, y, y.root_, b.nodes, ym);
    Node n;
    n.kind = Node::Kind::Call2;
    n.op = static_cast<std::uint8_t>(f);
    n.a = a;
    n.b = bb;
    b.nodes.push_back(n);
    return assemble(std::move(b), static_cast<int>(b.nodes.size()) - 1);
}

Expression Expression::ite(Cmp cmp, Expression l, Expression r, Expression then_e, Expression else_e) {
    TreeBuilder b;
    b.vars = l.vars_;
    auto lm = map_vars(l.vars_, b.vars);
    int li = graft(nullptr, l, l.root_, b.nodes, lm);
    auto rm = map_vars(r.vars_, b.vars);
    int ri = graft(nullptr, r, r.root_, b.nodes, rm);
    auto tm = map_vars(then_e.vars_, b.vars);
    int ti = graft(nullptr, then_e, then_e.root_, b.nodes, tm);
    auto em = map_vars(else_e.vars_, b.vars);
    int ei = graft(nullptr, else_e, else_e.root_, b.nodes, em);

    Node cond;
    cond.kind = Node::Kind::Bin;
    cond.op = 0xFF;
    cond.a = li;
    cond.b = ri;
    b.nodes.push_back(cond);
    int ci = static_cast<int>(b.nodes.size()) - 1;

    Node n;
    n.kind = Node::Kind::Ite;
    n.op = static_cast<std::uint8_t>(cmp);
    n.a = ti;
    n.b = ei;
    n.c = ci;
    b.nodes.push_back(n);
    return assemble(std::move(b), static_cast<int>(b.nodes.size()) - 1);
}

Expression Expression::substitute(const std::string& var_name, const Expression& replacement,
                                  const std::vector<std::string>& result_vars) const {
    TreeBuilder b;
    b.vars = result_vars;

    // Variable map for this tree: the substituted variable gets a sentinel.
    std::vector<int> self_map(vars_.size(), -1);
    int target = -1;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == var_name) { target = static_cast<int>(i); continue; }
        auto it = std::find(result_vars.begin(), result_vars.end(), vars_[i]);
        if (it == result_vars.end()) {
            if (uses(vars_[i]))
                throw InputError("substitute: variable '" + vars_[i] + "' not in result variables");
            continue;
        }
        self_map[i] = static_cast<int>(it - result_vars.begin());
    }
    std::vector<int> repl_map(replacement.vars_.size(), -1);
    for (std::size_t i = 0; i < replacement.vars_.size(); ++i) {
        auto it = std::find(result_vars.begin(), result_vars.end(), replacement.vars_[i]);
        if (it == result_vars.end()) {
            if (replacement.uses(replacement.vars_[i]))
                throw InputError("substitute: replacement variable '" + replacement.vars_[i] +
                                 "' not in result variables");
            continue;
        }
        repl_map[i] = static_cast<int>(it - result_vars.begin());
    }

    // Recursive copy with inline grafting of the replacement tree.
    std::function<int(int)> copy = [&](int idx) -> int {
        if (idx < 0) return -1;
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        if (n.kind == Node::Kind::Var && n.var == target)
            return graft(nullptr, replacement, replacement.root_, b.nodes, repl_map);
        Node c = n;
        c.a = copy(n.a);
        c.b = copy(n.b);
        c.c = copy(n.c);
        if (c.kind == Node::Kind::Var) c.var = self_map[static_cast<std::size_t>(n.var)];
        b.nodes.push_back(c);
        return static_cast<int>(b.nodes.size()) - 1;
    };
    int root = copy(root_);
    return assemble(std::move(b), root);
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

double diff_fd(const Expression& e, int var_index, std::span<const double> point, double h) {
    if (var_index < 0 || static_cast<std::size_t>(var_index) >= e.vars().size())
        throw EvalError("diff_fd: variable index out of range");
    std::vector<double> p(point.begin(), point.end());
    double x0 = p[static_cast<std::size_t>(var_index)];
    if (h <= 0.0) h = 1e-5 * std::max(1.0, std::fabs(x0));
    p[static_cast<std::size_t>(var_index)] = x0 + h;
    double up = e.eval(p);
    p[static_cast<std::size_t>(var_index)] = x0 - h;
    double dn = e.eval(p);
    return (up - dn) / (2.0 * h);
}

double diff_fd(const Expression& e, const std::string& var, std::span<const double> point, double h) {
    auto it = std::find(e.vars().begin(), e.vars().end(), var);
    if (it == e.vars().end()) throw EvalError("diff_fd: unknown variable '" + var + "'");
    return diff_fd(e, static_cast<int>(it - e.vars().begin()), point, h);
}

double diff2_fd(const Expression& e, int vi, int vj, std::span<const double> point, double h) {
    std::vector<double> p(point.begin(), point.end());
    auto at = [&](double di, double dj) {
        std::vector<double> q = p;
        q[static_cast<std::size_t>(vi)] += di;
        q[static_cast<std::size_t>(vj)] += dj;
        return e.eval(q);
    };
    if (vi == vj) {
        double x0 = p[static_cast<std::size_t>(vi)];
        double hh = h > 0.0 ? h : 1e-4 * std::max(1.0, std::fabs(x0));
        return (at(hh, 0.0) - 2.0 * e.eval(p) + at(-hh, 0.0)) / (hh * hh);
    }
    double hi = h > 0.0 ? h : 1e-4 * std::max(1.0, std::fabs(p[static_cast<std::size_t>(vi)]));
    double hj = h > 0.0 ? h : 1e-4 * std::max(1.0, std::fabs(p[static_cast<std::size_t>(vj)]));
    // 4-point cross stencil; hi/hj applied on their own axes.
    std::vector<double> q = p;
    auto at2 = [&](double di, double dj) {
        q = p;
        q[static_cast<std::size_t>(vi)] += di;
        q[static_cast<std::size_t>(vj)] += dj;
        return e.eval(q);
    };
    return (at2(hi, hj) - at2(hi, -hj) - at2(-hi, hj) + at2(-hi, -hj)) / (4.0 * hi * hj);
}

}  // namespace endo::expr
