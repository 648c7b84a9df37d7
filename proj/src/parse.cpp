#include "crg/parse.hpp"

#include <cctype>
#include <optional>
#include <vector>

namespace crg {

namespace {

enum class Tok { Number, Ident, Unknown, Plus, Minus, Star, Slash, Caret, LParen, RParen, Equals, End };

struct Token {
    Tok kind;
    std::string text;
    std::size_t pos;
    unsigned primes = 0;  // for the unknown f
};

std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (std::isdigit(static_cast<unsigned char>(c))) {
            while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
            out.push_back({Tok::Number, src.substr(start, i - start), start});
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            while (i < src.size() && std::isalpha(static_cast<unsigned char>(src[i]))) ++i;
            std::string word = src.substr(start, i - start);
            if (word == "f") {
                unsigned primes = 0;
                while (i < src.size() && src[i] == '\'') {
                    ++primes;
                    ++i;
                }
                out.push_back({Tok::Unknown, word, start, primes});
            } else {
                out.push_back({Tok::Ident, word, start});
            }
            continue;
        }
        Tok kind;
        switch (c) {
            case '+': kind = Tok::Plus; break;
            case '-': kind = Tok::Minus; break;
            case '*': kind = Tok::Star; break;
            case '/': kind = Tok::Slash; break;
            case '^': kind = Tok::Caret; break;
            case '(': kind = Tok::LParen; break;
            case ')': kind = Tok::RParen; break;
            case '=': kind = Tok::Equals; break;
            default: throw ParseError(std::string("unexpected character '") + c + "'", start);
        }
        out.push_back({kind, std::string(1, c), start});
        ++i;
    }
    out.push_back({Tok::End, "", src.size()});
    return out;
}

/// Value of a subexpression: an exponential polynomial plus, for equations,
/// a linear form in the derivatives of f.
struct Value {
    ExpPoly scalar;
    std::map<unsigned, ExpPoly> linear;

    bool has_unknown() const { return !linear.empty(); }
};

Value operator+(Value a, const Value& b) {
    a.scalar += b.scalar;
    for (const auto& [k, c] : b.linear) {
        a.linear[k] += c;
        if (a.linear[k].is_zero()) a.linear.erase(k);
    }
    return a;
}

Value negate(Value a) {
    a.scalar = -a.scalar;
    for (auto& [k, c] : a.linear) c = -c;
    return a;
}

Value scale(const Value& v, const ExpPoly& s) {
    Value out;
    out.scalar = v.scalar * s;
    for (const auto& [k, c] : v.linear) {
        ExpPoly p = c * s;
        if (!p.is_zero()) out.linear[k] = std::move(p);
    }
    return out;
}

class Parser {
public:
    Parser(const std::string& src, bool allow_unknown) : toks_(lex(src)), allow_unknown_(allow_unknown) {}

    Value parse_all() {
        Value v = expr();
        if (peek().kind == Tok::Equals) {
            if (!allow_unknown_) throw ParseError("'=' is only allowed in equations", peek().pos);
            next();
            Value rhs = expr();
            v = v + negate(rhs);
        }
        if (peek().kind != Tok::End) throw ParseError("unexpected '" + peek().text + "'", peek().pos);
        return v;
    }

private:
    const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(idx_ + ahead, toks_.size() - 1)]; }
    const Token& next() { return toks_[idx_++]; }
    void expect(Tok kind, const char* what) {
        if (peek().kind != kind) throw ParseError(std::string("expected ") + what, peek().pos);
        next();
    }

    Value expr() {
        Value acc = term();
        while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
            bool minus = next().kind == Tok::Minus;
            Value rhs = term();
            acc = acc + (minus ? negate(std::move(rhs)) : std::move(rhs));
        }
        return acc;
    }

    Value term() {
        Value acc = factor();
        while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
            const Token& op = next();
            std::size_t pos = peek().pos;
            Value rhs = factor();
            if (op.kind == Tok::Slash) {
                acc = divide(acc, rhs, pos);
            } else {
                acc = multiply(acc, rhs, op.pos);
            }
        }
        return acc;
    }

    Value multiply(const Value& a, const Value& b, std::size_t pos) {
        if (a.has_unknown() && b.has_unknown()) throw ParseError("product of two unknown terms is nonlinear", pos);
        if (a.has_unknown()) return scale(a, b.scalar);
        if (b.has_unknown()) return scale(b, a.scalar);
        return Value{a.scalar * b.scalar, {}};
    }

    Value divide(const Value& a, const Value& b, std::size_t pos) {
        if (b.has_unknown()) throw ParseError("division by the unknown", pos);
        const auto& terms = b.scalar.terms();
        if (terms.size() != 1 || !terms[0].exponent.is_zero() || !terms[0].mantissa.is_constant()) {
            throw ParseError("division by a non-constant", pos);
        }
        ExactComplex c = terms[0].mantissa.leading();
        return scale(a, ExpPoly(ExactComplex(1) / c));
    }

    Value factor() {
        if (peek().kind == Tok::Minus) {
            next();
            return negate(factor());
        }
        if (peek().kind == Tok::Plus) {
            next();
            return factor();
        }
        std::size_t pos = peek().pos;
        Value base = atom();
        if (peek().kind == Tok::Caret) {
            next();
            if (peek().kind != Tok::Number) throw ParseError("expected unsigned integer exponent", peek().pos);
            unsigned n = static_cast<unsigned>(std::stoul(next().text));
            if (base.has_unknown()) {
                if (n != 1) throw ParseError("power of the unknown is nonlinear", pos);
                return base;
            }
            return Value{pow(base.scalar, n), {}};
        }
        return base;
    }

    ExactComplex rational_literal() {
        const Token& num = next();
        Rational value = parse_rational(num.text);
        if (peek().kind == Tok::Slash && peek(1).kind == Tok::Number) {
            next();
            const Token& den = next();
            if (parse_rational(den.text) == 0) throw ParseError("zero denominator", den.pos);
            value /= parse_rational(den.text);
        }
        if (peek().kind == Tok::Ident && peek().text == "i") {
            next();
            return {0, value};
        }
        return {value, 0};
    }

    Value unknown(const Token& tok) {
        if (!allow_unknown_) throw ParseError("unknown 'f' is only allowed in equations", tok.pos);
        unsigned order = tok.primes;
        if (order == 0 && peek().kind == Tok::Caret && peek(1).kind == Tok::LParen) {
            next();
            next();
            if (peek().kind != Tok::Number) throw ParseError("expected derivative order", peek().pos);
            order = static_cast<unsigned>(std::stoul(next().text));
            expect(Tok::RParen, "')'");
        }
        Value v;
        v.linear[order] = ExpPoly(ExactComplex(1));
        return v;
    }

    Value atom() {
        const Token& tok = peek();
        switch (tok.kind) {
            case Tok::Number:
                return Value{ExpPoly(rational_literal()), {}};
            case Tok::LParen: {
                next();
                Value v = expr();
                expect(Tok::RParen, "')'");
                return v;
            }
            case Tok::Unknown:
                next();
                return unknown(tok);
            case Tok::Ident:
                next();
                return identifier(tok);
            default:
                throw ParseError("unexpected '" + tok.text + "'", tok.pos);
        }
    }

    Value identifier(const Token& tok) {
        if (tok.text == "z") return Value{ExpPoly(Poly::z()), {}};
        if (tok.text == "i") return Value{ExpPoly(ExactComplex::i()), {}};
        const std::string& name = tok.text;
        if (name != "exp" && name != "sin" && name != "cos" && name != "sinh" && name != "cosh") {
            throw ParseError("unknown identifier '" + name + "'", tok.pos);
        }
        expect(Tok::LParen, "'(' after function name");
        std::size_t arg_pos = peek().pos;
        Value arg = expr();
        expect(Tok::RParen, "')'");
        if (arg.has_unknown() || !arg.scalar.is_polynomial()) {
            throw ParseError("argument of " + name + " must be a polynomial in z", arg_pos);
        }
        Poly w = arg.scalar.as_polynomial();
        const ExactComplex half(Rational(1, 2));
        const ExactComplex i = ExactComplex::i();
        auto e = [](const Poly& q) { return ExpPoly::exp_of(q); };
        ExpPoly out;
        if (name == "exp") {
            out = e(w);
        } else if (name == "cos") {
            out = ExpPoly(half) * (e(Poly(i) * w) + e(Poly(-i) * w));
        } else if (name == "sin") {
            // (e^{iw} - e^{-iw}) / (2i)
            out = ExpPoly(ExactComplex(0, Rational(-1, 2))) * (e(Poly(i) * w) - e(Poly(-i) * w));
        } else if (name == "cosh") {
            out = ExpPoly(half) * (e(w) + e(-w));
        } else {
            out = ExpPoly(half) * (e(w) - e(-w));
        }
        return Value{out, {}};
    }

    std::vector<Token> toks_;
    std::size_t idx_ = 0;
    bool allow_unknown_;
};

}  // namespace

ExpPoly parse_exppoly(const std::string& text) { return Parser(text, false).parse_all().scalar; }

std::map<unsigned, ExpPoly> parse_linear_form(const std::string& text) {
    Value v = Parser(text, true).parse_all();
    if (!v.scalar.is_zero()) throw ParseError("equation has a term without the unknown (inhomogeneous)", 0);
    if (v.linear.empty()) throw ParseError("equation does not contain the unknown f", 0);
    return v.linear;
}

}  // namespace crg
