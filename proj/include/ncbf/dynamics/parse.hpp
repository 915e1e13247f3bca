#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ncbf/dynamics/problem.hpp"

namespace ncbf {

// Dynamics source format, one statement per line, '#' starts a comment:
//
//   system <name>                    optional label
//   states <n>
//   inputs <m>                       optional, default 0
//   names <id> ... <id>              optional aliases for x1 .. xn
//   box <k> <lo> <hi>                one line per state axis
//   initial <k> <lo> <hi>            optional initial region
//   f<k> = <expr>                    every k in 1..n
//   g<k>_<j> = <expr>                omitted entries are 0; g<k><j> also accepted
//   h = <expr>
//   input_constraint <a1> ... <am> <= <c>
//   unbounded_inputs
//
// Expressions use + - * / with the usual precedence, '^' with an integer
// exponent (binding tighter than unary minus), parentheses, variables x1 ..
// xn or declared names, and the functions sin cos sqrt abs min max.

namespace detail {

enum class TokenKind { Number, Ident, Symbol, End };

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text;
    double number = 0.0;
    std::size_t column = 0; // 1-based
};

inline std::vector<Token> tokenize_line(std::string_view line, std::size_t line_no)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        const char c = line[i];
        if (c == '#') {
            break;
        }
        if (std::isspace(static_cast<unsigned char>(c)) != 0) {
            ++i;
            continue;
        }
        const std::size_t col = i + 1;
        if (std::isdigit(static_cast<unsigned char>(c)) != 0 ||
            (c == '.' && i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1])) != 0)) {
            std::size_t j = i;
            while (j < line.size() && (std::isdigit(static_cast<unsigned char>(line[j])) != 0 || line[j] == '.')) {
                ++j;
            }
            if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < line.size() && (line[k] == '+' || line[k] == '-')) {
                    ++k;
                }
                if (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k])) != 0) {
                    while (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k])) != 0) {
                        ++k;
                    }
                    j = k;
                }
            }
            Token t{TokenKind::Number, std::string(line.substr(i, j - i)), 0.0, col};
            const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
            if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size() || !std::isfinite(t.number)) {
                throw ParseError("malformed number '" + t.text + "'", line_no, col);
            }
            out.push_back(std::move(t));
            i = j;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_') {
            std::size_t j = i;
            while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) != 0 || line[j] == '_')) {
                ++j;
            }
            out.push_back({TokenKind::Ident, std::string(line.substr(i, j - i)), 0.0, col});
            i = j;
            continue;
        }
        if (c == '<' && i + 1 < line.size() && line[i + 1] == '=') {
            out.push_back({TokenKind::Symbol, "<=", 0.0, col});
            i += 2;
            continue;
        }
        if (std::string_view("+-*/^(),=").find(c) != std::string_view::npos) {
            out.push_back({TokenKind::Symbol, std::string(1, c), 0.0, col});
            ++i;
            continue;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line_no, col);
    }
    out.push_back({TokenKind::End, "", 0.0, line.size() + 1});
    return out;
}

/// Recursive-descent parser over the tokens of one line.
class LineParser {
public:
    LineParser(std::vector<Token> tokens, std::size_t line_no, int n, const std::map<std::string, int>& names)
        : tokens_(std::move(tokens)), line_(line_no), n_(n), names_(names)
    {
    }

    const Token& peek(std::size_t ahead = 0) const { return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)]; }
    bool at_end() const { return peek().kind == TokenKind::End; }

    [[noreturn]] void fail(const std::string& what, const Token& at) const { throw ParseError(what, line_, at.column); }
    [[noreturn]] void fail(const std::string& what) const { fail(what, peek()); }

    const Token& next() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }

    bool accept(const std::string& symbol)
    {
        if (peek().kind == TokenKind::Symbol && peek().text == symbol) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(const std::string& symbol)
    {
        if (!accept(symbol)) {
            fail("expected '" + symbol + "'" + describe_found());
        }
    }

    void expect_end()
    {
        if (!at_end()) {
            fail("unexpected '" + peek().text + "'");
        }
    }

    std::string describe_found() const
    {
        return at_end() ? " at end of line" : " before '" + peek().text + "'";
    }

    std::string ident()
    {
        if (peek().kind != TokenKind::Ident) {
            fail("expected an identifier" + describe_found());
        }
        return next().text;
    }

    double signed_number()
    {
        double sign = 1.0;
        if (accept("-")) {
            sign = -1.0;
        } else {
            accept("+");
        }
        if (peek().kind != TokenKind::Number) {
            fail("expected a number" + describe_found());
        }
        return sign * next().number;
    }

    long integer()
    {
        const Token& t = peek();
        if (t.kind != TokenKind::Number || t.text.find_first_not_of("0123456789") != std::string::npos) {
            fail("expected an integer" + describe_found());
        }
        if (t.text.size() > 9) {
            fail("integer too large");
        }
        ++pos_;
        return std::stol(t.text);
    }

    Expr expression()
    {
        Expr e = term();
        for (;;) {
            if (accept("+")) {
                e = e + term();
            } else if (accept("-")) {
                e = e - term();
            } else {
                return e;
            }
        }
    }

private:
    Expr term()
    {
        Expr e = unary();
        for (;;) {
            if (accept("*")) {
                e = e * unary();
            } else if (accept("/")) {
                e = e / unary();
            } else {
                return e;
            }
        }
    }

    Expr unary()
    {
        if (accept("-")) {
            // A bare literal folds into a negative constant; "-3^2" stays -(3^2).
            if (peek().kind == TokenKind::Number && !(peek(1).kind == TokenKind::Symbol && peek(1).text == "^")) {
                return Expr::constant(-next().number);
            }
            return -unary();
        }
        if (accept("+")) {
            return unary();
        }
        return power();
    }

    Expr power()
    {
        Expr base = primary();
        if (accept("^")) {
            bool negative = false;
            if (accept("-")) {
                negative = true;
            } else {
                accept("+");
            }
            const Token& t = peek();
            const long k = integer();
            if (k > 64) {
                fail("exponent too large", t);
            }
            return Expr::power(base, negative ? -static_cast<int>(k) : static_cast<int>(k));
        }
        return base;
    }

    Expr primary()
    {
        const Token& t = peek();
        if (t.kind == TokenKind::Number) {
            ++pos_;
            return Expr::constant(t.number);
        }
        if (accept("(")) {
            Expr e = expression();
            expect(")");
            return e;
        }
        if (t.kind == TokenKind::Ident) {
            ++pos_;
            static const std::map<std::string, ExprOp> unary_fns{
                {"sin", ExprOp::Sin}, {"cos", ExprOp::Cos}, {"sqrt", ExprOp::Sqrt}, {"abs", ExprOp::Abs}};
            static const std::map<std::string, ExprOp> binary_fns{{"min", ExprOp::Min}, {"max", ExprOp::Max}};
            if (auto it = unary_fns.find(t.text); it != unary_fns.end()) {
                expect("(");
                Expr a = expression();
                expect(")");
                return Expr::unary(it->second, a);
            }
            if (auto it = binary_fns.find(t.text); it != binary_fns.end()) {
                expect("(");
                Expr a = expression();
                expect(",");
                Expr b = expression();
                expect(")");
                return Expr::binary(it->second, a, b);
            }
            return Expr::variable(variable_index(t));
        }
        if (t.kind == TokenKind::End) {
            fail("expected an operand at end of line", t);
        }
        fail("unexpected '" + t.text + "'", t);
    }

    int variable_index(const Token& t) const
    {
        if (auto it = names_.find(t.text); it != names_.end()) {
            return it->second;
        }
        if (t.text.size() > 1 && t.text.size() < 9 && t.text[0] == 'x' && t.text.find_first_not_of("0123456789", 1) == std::string::npos &&
            t.text[1] != '0') {
            const long k = std::stol(t.text.substr(1));
            if (k > n_) {
                fail("variable " + t.text + " exceeds the declared " + std::to_string(n_) + " states", t);
            }
            return static_cast<int>(k - 1);
        }
        fail("unknown identifier '" + t.text + "'", t);
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    std::size_t line_;
    int n_;
    const std::map<std::string, int>& names_;
};

/// Splits "f3", "g2_1", "g21" into (letter, indices); empty on mismatch.
inline std::vector<long> statement_indices(const std::string& ident, char letter)
{
    if (ident.size() < 2 || ident[0] != letter) {
        return {};
    }
    const std::string rest = ident.substr(1);
    std::vector<long> out;
    std::size_t start = 0;
    while (start <= rest.size()) {
        const std::size_t us = rest.find('_', start);
        const std::string part = rest.substr(start, us == std::string::npos ? std::string::npos : us - start);
        if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos || part.size() > 6) {
            return {};
        }
        out.push_back(std::stol(part));
        if (us == std::string::npos) {
            break;
        }
        start = us + 1;
    }
    if (letter == 'g' && out.size() == 1) {
        const std::string digits = rest;
        if (digits.size() != 2) {
            return {};
        }
        return {digits[0] - '0', digits[1] - '0'};
    }
    return out;
}

inline std::string format_number(double v)
{
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

} // namespace detail

inline SafetyProblem parse_problem(std::string_view source)
{
    using detail::LineParser;
    SafetyProblem p;
    bool have_states = false;
    bool have_inputs = false;
    bool have_h = false;
    bool have_initial = false;
    std::vector<bool> have_f;
    std::vector<bool> have_box;
    std::vector<bool> have_initial_axis;
    std::vector<std::vector<bool>> have_g;
    std::vector<std::vector<double>> a_rows;
    std::vector<double> c_entries;
    std::map<std::string, int> names;
    Vector box_lo;
    Vector box_hi;
    Vector init_lo;
    Vector init_hi;
    std::size_t last_line = 0;

    auto ensure_g_shape = [&] {
        have_g.assign(static_cast<std::size_t>(p.n), std::vector<bool>(static_cast<std::size_t>(p.m), false));
        p.g.assign(static_cast<std::size_t>(p.n),
                   std::vector<Expr>(static_cast<std::size_t>(p.m), Expr::constant(0.0)));
    };

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= source.size()) {
        std::size_t end = source.find('\n', start);
        if (end == std::string_view::npos) {
            end = source.size();
        }
        std::string_view line = source.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        ++line_no;
        last_line = line_no;
        start = end + 1;

        LineParser lp(detail::tokenize_line(line, line_no), line_no, p.n, names);
        if (lp.at_end()) {
            if (end == source.size()) {
                break;
            }
            continue;
        }
        const detail::Token head = lp.peek();
        const std::string kw = lp.ident();

        auto need_states = [&] {
            if (!have_states) {
                lp.fail("'" + kw + "' before 'states'", head);
            }
        };
        auto axis_index = [&]() {
            const detail::Token t = lp.peek();
            const long k = lp.integer();
            if (k < 1 || k > p.n) {
                lp.fail("axis " + std::to_string(k) + " outside 1.." + std::to_string(p.n), t);
            }
            return static_cast<int>(k - 1);
        };

        if (kw == "system") {
            p.name = lp.ident();
            lp.expect_end();
        } else if (kw == "states") {
            if (have_states) {
                lp.fail("'states' declared twice", head);
            }
            const detail::Token t = lp.peek();
            const long n = lp.integer();
            if (n < 1 || n > 1000) {
                lp.fail("state count must be in 1..1000", t);
            }
            lp.expect_end();
            p.n = static_cast<int>(n);
            have_states = true;
            have_f.assign(static_cast<std::size_t>(p.n), false);
            have_box.assign(static_cast<std::size_t>(p.n), false);
            have_initial_axis.assign(static_cast<std::size_t>(p.n), false);
            p.f.assign(static_cast<std::size_t>(p.n), Expr::constant(0.0));
            box_lo = box_hi = init_lo = init_hi = Vector::Zero(p.n);
            ensure_g_shape();
        } else if (kw == "inputs") {
            need_states();
            if (have_inputs) {
                lp.fail("'inputs' declared twice", head);
            }
            const detail::Token t = lp.peek();
            const long m = lp.integer();
            if (m > 1000) {
                lp.fail("input count too large", t);
            }
            lp.expect_end();
            p.m = static_cast<int>(m);
            have_inputs = true;
            ensure_g_shape();
        } else if (kw == "names") {
            need_states();
            if (!p.state_names.empty()) {
                lp.fail("'names' declared twice", head);
            }
            while (!lp.at_end()) {
                const detail::Token t = lp.peek();
                const std::string id = lp.ident();
                static const std::set<std::string> reserved{"h", "sin", "cos", "sqrt", "abs", "min", "max"};
                const bool looks_like_xk =
                    id.size() > 1 && id[0] == 'x' && id.find_first_not_of("0123456789", 1) == std::string::npos;
                const std::string own_default = "x" + std::to_string(p.state_names.size() + 1);
                if (names.count(id) != 0U || reserved.count(id) != 0U || (looks_like_xk && id != own_default)) {
                    lp.fail("name '" + id + "' is reserved or repeated", t);
                }
                names[id] = static_cast<int>(p.state_names.size());
                p.state_names.push_back(id);
            }
            if (static_cast<int>(p.state_names.size()) != p.n) {
                lp.fail("expected " + std::to_string(p.n) + " names, got " + std::to_string(p.state_names.size()),
                        head);
            }
        } else if (kw == "box" || kw == "initial") {
            need_states();
            const int k = axis_index();
            const double lo = lp.signed_number();
            const detail::Token hi_tok = lp.peek();
            const double hi = lp.signed_number();
            lp.expect_end();
            auto& seen = kw == "box" ? have_box : have_initial_axis;
            if (seen[static_cast<std::size_t>(k)]) {
                lp.fail(kw + " for axis " + std::to_string(k + 1) + " given twice", head);
            }
            if (kw == "box" ? !(lo < hi) : !(lo <= hi)) {
                lp.fail("empty interval", hi_tok);
            }
            seen[static_cast<std::size_t>(k)] = true;
            (kw == "box" ? box_lo : init_lo)[k] = lo;
            (kw == "box" ? box_hi : init_hi)[k] = hi;
            have_initial = have_initial || kw == "initial";
        } else if (kw == "unbounded_inputs") {
            need_states();
            lp.expect_end();
            if (p.unbounded_input) {
                lp.fail("'unbounded_inputs' given twice", head);
            }
            if (!a_rows.empty()) {
                lp.fail("'unbounded_inputs' conflicts with input constraints", head);
            }
            p.unbounded_input = true;
        } else if (kw == "input_constraint") {
            need_states();
            if (p.unbounded_input) {
                lp.fail("input constraint conflicts with 'unbounded_inputs'", head);
            }
            if (p.m == 0) {
                lp.fail("input constraint on a system without inputs", head);
            }
            std::vector<double> row;
            while (!(lp.peek().kind == detail::TokenKind::Symbol && lp.peek().text == "<=") && !lp.at_end()) {
                row.push_back(lp.signed_number());
            }
            if (static_cast<int>(row.size()) != p.m) {
                lp.fail("constraint row has " + std::to_string(row.size()) + " coefficients, expected " +
                        std::to_string(p.m));
            }
            lp.expect("<=");
            c_entries.push_back(lp.signed_number());
            lp.expect_end();
            a_rows.push_back(std::move(row));
        } else if (kw == "h") {
            need_states();
            if (have_h) {
                lp.fail("'h' defined twice", head);
            }
            lp.expect("=");
            p.h = lp.expression();
            lp.expect_end();
            have_h = true;
        } else if (auto fi = detail::statement_indices(kw, 'f'); kw[0] == 'f' && fi.size() == 1) {
            need_states();
            const long k = fi[0];
            if (k < 1 || k > p.n) {
                lp.fail("'" + kw + "' outside the declared " + std::to_string(p.n) + " states", head);
            }
            if (have_f[static_cast<std::size_t>(k - 1)]) {
                lp.fail("'" + kw + "' defined twice", head);
            }
            lp.expect("=");
            p.f[static_cast<std::size_t>(k - 1)] = lp.expression();
            lp.expect_end();
            have_f[static_cast<std::size_t>(k - 1)] = true;
        } else if (auto gi = detail::statement_indices(kw, 'g'); kw[0] == 'g' && gi.size() == 2) {
            need_states();
            const long k = gi[0];
            const long j = gi[1];
            if (k < 1 || k > p.n || j < 1 || j > p.m) {
                lp.fail("'" + kw + "' outside the declared " + std::to_string(p.n) + "x" + std::to_string(p.m) +
                            " input matrix",
                        head);
            }
            auto seen = have_g[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(j - 1)];
            if (seen) {
                lp.fail("'" + kw + "' defined twice", head);
            }
            lp.expect("=");
            p.g[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(j - 1)] = lp.expression();
            lp.expect_end();
            seen = true;
        } else {
            lp.fail("unknown statement '" + kw + "'", head);
        }
        if (end == source.size()) {
            break;
        }
    }

    const std::size_t eof_line = last_line == 0 ? 1 : last_line;
    if (!have_states) {
        throw ParseError("missing 'states' declaration", eof_line, 1);
    }
    for (int k = 0; k < p.n; ++k) {
        if (!have_f[static_cast<std::size_t>(k)]) {
            throw ParseError("missing f" + std::to_string(k + 1), eof_line, 1);
        }
        if (!have_box[static_cast<std::size_t>(k)]) {
            throw ParseError("missing box for axis " + std::to_string(k + 1), eof_line, 1);
        }
        if (have_initial && !have_initial_axis[static_cast<std::size_t>(k)]) {
            throw ParseError("missing initial interval for axis " + std::to_string(k + 1), eof_line, 1);
        }
    }
    if (!have_h) {
        throw ParseError("missing h", eof_line, 1);
    }
    if (p.m > 0 && !p.unbounded_input && a_rows.empty()) {
        throw ParseError("inputs declared without 'input_constraint' or 'unbounded_inputs'", eof_line, 1);
    }
    p.input_A = Matrix::Zero(static_cast<Eigen::Index>(a_rows.size()), p.m);
    p.input_c = Vector::Zero(static_cast<Eigen::Index>(c_entries.size()));
    for (std::size_t r = 0; r < a_rows.size(); ++r) {
        for (int j = 0; j < p.m; ++j) {
            p.input_A(static_cast<Eigen::Index>(r), j) = a_rows[r][static_cast<std::size_t>(j)];
        }
        p.input_c[static_cast<Eigen::Index>(r)] = c_entries[r];
    }
    p.state_box = HyperCube(box_lo, box_hi);
    if (have_initial) {
        p.initial_box = HyperCube(init_lo, init_hi);
    }
    p.validate();
    return p;
}

/// Canonical source text; parse_problem(unparse_problem(p)) == p.
inline std::string unparse_problem(const SafetyProblem& p)
{
    using detail::format_number;
    std::ostringstream out;
    if (!p.name.empty()) {
        out << "system " << p.name << "\n";
    }
    out << "states " << p.n << "\n";
    out << "inputs " << p.m << "\n";
    if (!p.state_names.empty()) {
        out << "names";
        for (const auto& s : p.state_names) {
            out << ' ' << s;
        }
        out << "\n";
    }
    for (int k = 0; k < p.n; ++k) {
        out << "box " << k + 1 << ' ' << format_number(p.state_box.lo[k]) << ' ' << format_number(p.state_box.hi[k])
            << "\n";
    }
    if (p.initial_box) {
        for (int k = 0; k < p.n; ++k) {
            out << "initial " << k + 1 << ' ' << format_number(p.initial_box->lo[k]) << ' '
                << format_number(p.initial_box->hi[k]) << "\n";
        }
    }
    for (int k = 0; k < p.n; ++k) {
        out << "f" << k + 1 << " = " << p.f_expr(k).to_string() << "\n";
    }
    for (int k = 0; k < p.n; ++k) {
        for (int j = 0; j < p.m; ++j) {
            out << "g" << k + 1 << "_" << j + 1 << " = " << p.g_expr(k, j).to_string() << "\n";
        }
    }
    out << "h = " << p.h.to_string() << "\n";
    if (p.unbounded_input) {
        out << "unbounded_inputs\n";
    }
    for (Eigen::Index r = 0; r < p.input_A.rows(); ++r) {
        out << "input_constraint";
        for (Eigen::Index j = 0; j < p.input_A.cols(); ++j) {
            out << ' ' << format_number(p.input_A(r, j));
        }
        out << " <= " << format_number(p.input_c[r]) << "\n";
    }
    return out.str();
}

/// One expression over the states of `p`, e.g. a nominal feedback law.
inline Expr parse_expression(std::string_view text, const SafetyProblem& p)
{
    std::map<std::string, int> names;
    for (std::size_t k = 0; k < p.state_names.size(); ++k) {
        names[p.state_names[k]] = static_cast<int>(k);
    }
    detail::LineParser lp(detail::tokenize_line(text, 1), 1, p.n, names);
    if (lp.at_end()) {
        lp.fail("empty expression");
    }
    Expr e = lp.expression();
    if (!lp.at_end()) {
        lp.fail("unexpected '" + lp.peek().text + "' after expression");
    }
    return e;
}

inline SafetyProblem parse_problem_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open system file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_problem(buf.str());
}

} // namespace ncbf
