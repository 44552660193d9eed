#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mmskit {

using Bindings = std::map<std::string, double, std::less<>>;

/// Compiled form of the mapper/flow expression language:
///
///     expr   := term (('+'|'-') term)*
///     term   := factor (('*'|'/') factor)*
///     factor := NUMBER | IDENT | '(' expr ')'
///             | 'min(' expr ',' expr ')' | 'max(' expr ',' expr ')'
///     cond   := 'if' expr CMP expr 'then' expr 'else' expr
///     CMP    := '<' | '<=' | '>' | '>=' | '=='
///
/// A body is either a single `cond` or a single `expr`.
class Expression {
public:
    /// Throws ParseError naming the column of the first bad token.
    static Expression parse(std::string_view text);

    /// Throws Error on unbound identifiers, division by zero or a non-finite
    /// result.
    double evaluate(const Bindings& bindings) const;

    std::set<std::string> free_variables() const;
    bool is_conditional() const;
    const std::string& text() const noexcept { return text_; }

    bool operator==(const Expression& other) const { return text_ == other.text_; }

private:
    enum class Op : std::uint8_t { number, variable, add, sub, mul, div, min, max, cond };
    enum class Cmp : std::uint8_t { lt, le, gt, ge, eq };

    struct Node {
        Op op = Op::number;
        Cmp cmp = Cmp::lt;
        double value = 0.0;
        std::string name;
        // Operand indices into nodes_. cond uses all four: lhs, rhs, then, else.
        int a = -1, b = -1, c = -1, d = -1;
    };

    class Parser;

    double eval_node(int index, const Bindings& bindings) const;

    std::string text_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

} // namespace mmskit
