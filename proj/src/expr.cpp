#include "mmskit/expr.hpp"

#include "mmskit/error.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace mmskit {

namespace {

enum class Tok { number, ident, plus, minus, star, slash, lparen, rparen, comma, lt, le, gt, ge, eq, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;
    double value = 0.0;
    std::size_t column = 0;
};

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto fail = [&](std::size_t col, const std::string& msg) {
        throw ParseError("body", "column " + std::to_string(col + 1) + ": " + msg);
    };
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        Token t;
        t.column = i;
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            if (j < s.size() && s[j] == '.') {
                ++j;
                while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            }
            if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
                if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
                    while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
                    j = k;
                }
            }
            t.kind = Tok::number;
            t.text = std::string(s.substr(i, j - i));
            auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + j, t.value);
            if (ec != std::errc() || ptr != s.data() + j) fail(i, "malformed number '" + t.text + "'");
            i = j;
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
            t.kind = Tok::ident;
            t.text = std::string(s.substr(i, j - i));
            i = j;
        } else {
            auto two = s.substr(i, 2);
            if (two == "<=") { t.kind = Tok::le; i += 2; }
            else if (two == ">=") { t.kind = Tok::ge; i += 2; }
            else if (two == "==") { t.kind = Tok::eq; i += 2; }
            else {
                switch (c) {
                case '+': t.kind = Tok::plus; break;
                case '-': t.kind = Tok::minus; break;
                case '*': t.kind = Tok::star; break;
                case '/': t.kind = Tok::slash; break;
                case '(': t.kind = Tok::lparen; break;
                case ')': t.kind = Tok::rparen; break;
                case ',': t.kind = Tok::comma; break;
                case '<': t.kind = Tok::lt; break;
                case '>': t.kind = Tok::gt; break;
                default: fail(i, std::string("unexpected character '") + c + "'");
                }
                ++i;
            }
            t.text = std::string(s.substr(t.column, i - t.column));
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::end;
    end.column = s.size();
    out.push_back(end);
    return out;
}

bool is_keyword(const std::string& s) { return s == "if" || s == "then" || s == "else" || s == "min" || s == "max"; }

} // namespace

class Expression::Parser {
public:
    Parser(Expression& e, std::vector<Token> tokens) : e_(e), toks_(std::move(tokens)) {}

    int parse_body() {
        int root;
        if (peek().kind == Tok::ident && peek().text == "if") root = parse_conditional();
        else root = parse_expr();
        if (peek().kind != Tok::end) fail("unexpected '" + peek().text + "'");
        return root;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& take() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("body", "column " + std::to_string(peek().column + 1) + ": " + msg);
    }

    void expect(Tok kind, const char* what) {
        if (peek().kind != kind) fail(std::string("expected ") + what);
        ++pos_;
    }

    void expect_keyword(const char* kw) {
        if (peek().kind != Tok::ident || peek().text != kw) fail(std::string("expected '") + kw + "'");
        ++pos_;
    }

    int add(Node n) {
        e_.nodes_.push_back(std::move(n));
        return static_cast<int>(e_.nodes_.size() - 1);
    }

    int binary(Op op, int a, int b) {
        Node n;
        n.op = op;
        n.a = a;
        n.b = b;
        return add(std::move(n));
    }

    int parse_conditional() {
        expect_keyword("if");
        const int lhs = parse_expr();
        Cmp cmp;
        switch (peek().kind) {
        case Tok::lt: cmp = Cmp::lt; break;
        case Tok::le: cmp = Cmp::le; break;
        case Tok::gt: cmp = Cmp::gt; break;
        case Tok::ge: cmp = Cmp::ge; break;
        case Tok::eq: cmp = Cmp::eq; break;
        default: fail("expected a comparison (<, <=, >, >=, ==)");
        }
        ++pos_;
        const int rhs = parse_expr();
        expect_keyword("then");
        const int yes = parse_expr();
        expect_keyword("else");
        const int no = parse_expr();
        Node n;
        n.op = Op::cond;
        n.cmp = cmp;
        n.a = lhs;
        n.b = rhs;
        n.c = yes;
        n.d = no;
        return add(std::move(n));
    }

    int parse_expr() {
        int lhs = parse_term();
        while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
            const Op op = take().kind == Tok::plus ? Op::add : Op::sub;
            lhs = binary(op, lhs, parse_term());
        }
        return lhs;
    }

    int parse_term() {
        int lhs = parse_factor();
        while (peek().kind == Tok::star || peek().kind == Tok::slash) {
            const Op op = take().kind == Tok::star ? Op::mul : Op::div;
            lhs = binary(op, lhs, parse_factor());
        }
        return lhs;
    }

    int parse_factor() {
        const Token& t = peek();
        switch (t.kind) {
        case Tok::number: {
            Node n;
            n.op = Op::number;
            n.value = take().value;
            return add(std::move(n));
        }
        case Tok::lparen: {
            ++pos_;
            const int inner = parse_expr();
            expect(Tok::rparen, "')'");
            return inner;
        }
        case Tok::ident: {
            if (t.text == "min" || t.text == "max") {
                const Op op = t.text == "min" ? Op::min : Op::max;
                ++pos_;
                expect(Tok::lparen, "'(' after min/max");
                const int a = parse_expr();
                expect(Tok::comma, "','");
                const int b = parse_expr();
                expect(Tok::rparen, "')'");
                return binary(op, a, b);
            }
            if (is_keyword(t.text)) fail("unexpected keyword '" + t.text + "'");
            Node n;
            n.op = Op::variable;
            n.name = take().text;
            return add(std::move(n));
        }
        case Tok::end: fail("unexpected end of expression");
        default: fail("unexpected '" + t.text + "'");
        }
    }

    Expression& e_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

Expression Expression::parse(std::string_view text) {
    Expression e;
    e.text_ = std::string(text);
    Parser parser(e, tokenize(text));
    e.root_ = parser.parse_body();
    return e;
}

double Expression::evaluate(const Bindings& bindings) const {
    if (root_ < 0) throw Error("evaluating an empty expression");
    const double v = eval_node(root_, bindings);
    if (!std::isfinite(v)) throw Error("expression '" + text_ + "' produced a non-finite value");
    return v;
}

double Expression::eval_node(int index, const Bindings& env) const {
    const Node& n = nodes_[static_cast<std::size_t>(index)];
    switch (n.op) {
    case Op::number: return n.value;
    case Op::variable: {
        auto it = env.find(n.name);
        if (it == env.end()) throw Error("unbound variable '" + n.name + "' in '" + text_ + "'");
        return it->second;
    }
    case Op::add: return eval_node(n.a, env) + eval_node(n.b, env);
    case Op::sub: return eval_node(n.a, env) - eval_node(n.b, env);
    case Op::mul: return eval_node(n.a, env) * eval_node(n.b, env);
    case Op::div: {
        const double num = eval_node(n.a, env);
        const double den = eval_node(n.b, env);
        if (den == 0.0) throw Error("division by zero in '" + text_ + "'");
        return num / den;
    }
    case Op::min: return std::min(eval_node(n.a, env), eval_node(n.b, env));
    case Op::max: return std::max(eval_node(n.a, env), eval_node(n.b, env));
    case Op::cond: {
        const double l = eval_node(n.a, env);
        const double r = eval_node(n.b, env);
        bool holds = false;
        switch (n.cmp) {
        case Cmp::lt: holds = l < r; break;
        case Cmp::le: holds = l <= r; break;
        case Cmp::gt: holds = l > r; break;
        case Cmp::ge: holds = l >= r; break;
        case Cmp::eq: holds = l == r; break;
        }
        return eval_node(holds ? n.c : n.d, env);
    }
    }
    return 0.0;
}

std::set<std::string> Expression::free_variables() const {
    std::set<std::string> out;
    for (const auto& n : nodes_) {
        if (n.op == Op::variable) out.insert(n.name);
    }
    return out;
}

bool Expression::is_conditional() const {
    return root_ >= 0 && nodes_[static_cast<std::size_t>(root_)].op == Op::cond;
}

} // namespace mmskit
