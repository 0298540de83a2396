#include "hlt/parser.hpp"

#include <cctype>
#include <cstdlib>

namespace hlt {

namespace {

enum class Tok {
    End, Int, Ident, Keyword, Punct,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::int64_t num = 0;
    int line = 1, col = 1;
};

const char* kKeywords[] = {
    "let", "ghost", "in", "if", "then", "else", "while", "rec", "fun", "fork",
    "match", "with", "end", "inl", "inr", "fst", "snd", "ref", "refg", "free",
    "atomic", "abort", "finish", "cur", "CurrentThread", "NewSignal", "SetSignal",
    "NewExpectPerm", "Expect", "lower", "to", "times", "at", "true", "false",
    "poison", "AllocN", "allocg", "CAS", "CmpXchg", "Xchg", "FAA", "not",
    "newproph", "resolvewith", "main", "degrees", "levels", "degree", "level",
    "name", "init_callperms", "fields", "atoms", "lexsum", "d0",
};

bool is_keyword(const std::string& s) {
    for (const char* k : kKeywords)
        if (s == k) return true;
    return false;
}

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }
    Token next() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        skip_ws();
        tok_ = Token{};
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= src_.size()) {
            tok_.kind = Tok::End;
            return;
        }
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
            tok_.kind = Tok::Int;
            tok_.text = src_.substr(start, pos_ - start);
            tok_.num = std::strtoll(tok_.text.c_str(), nullptr, 10);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                bump();
            tok_.text = src_.substr(start, pos_ - start);
            tok_.kind = is_keyword(tok_.text) ? Tok::Keyword : Tok::Ident;
            return;
        }
        // multi-char punctuation, longest first
        static const char* puncts[] = {":=g", "!=", ":=", "!g", "<=", "&&", "=>", "+l",
                                       "(", ")", "[", "]", "{", "}", ",", ";", ".", "=",
                                       "<", "+", "-", "%", "!", "|"};
        for (const char* p : puncts) {
            std::size_t n = std::string(p).size();
            if (src_.compare(pos_, n, p) == 0) {
                // "!g" only when not followed by an identifier char ("!global" is a deref)
                if (std::string(p) == "!g" && pos_ + 2 < src_.size()) {
                    char nx = src_[pos_ + 2];
                    if (std::isalnum(static_cast<unsigned char>(nx)) || nx == '_') continue;
                }
                tok_.kind = Tok::Punct;
                tok_.text = p;
                for (std::size_t i = 0; i < n; ++i) bump();
                return;
            }
        }
        throw ParseError(std::string("unsupported character '") + c + "'", line_, col_);
    }

    void skip_ws() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') bump();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                bump();
            } else {
                break;
            }
        }
    }

    void bump() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

class Parser {
public:
    explicit Parser(const std::string& src) : lex_(src) {}

    Prog parse_program() {
        Prog p;
        bool have_degrees = false, have_levels = false;
        int last_domain = 0;  // 1 = degrees, 2 = levels
        while (true) {
            const Token& t = lex_.peek();
            if (t.kind == Tok::Keyword && t.text == "main") break;
            if (t.kind == Tok::End) err("expected 'main = <expr>'");
            if (t.kind != Tok::Keyword) err("expected a header clause or 'main'");
            if (t.text == "degrees") {
                lex_.next();
                expect_punct("=");
                p.degrees = parse_domain();
                have_degrees = true;
                last_domain = 1;
            } else if (t.text == "levels") {
                lex_.next();
                expect_punct("=");
                p.levels = parse_domain();
                have_levels = true;
                last_domain = 2;
            } else if (t.text == "degree" || t.text == "level" || t.text == "name") {
                std::string kw = lex_.next().text;
                int which = kw == "degree" ? 1 : kw == "level" ? 2 : last_domain;
                if (which == 0) err("'name' alias before any domain declaration");
                Token id = lex_.next();
                if (id.kind != Tok::Ident) err("expected alias name", id);
                expect_punct("=");
                std::vector<int> path = parse_path();
                if (which == 1) {
                    if (!p.degrees.valid_path(path))
                        err("degree alias path not in declared degree domain", id);
                    p.degree_names.emplace_back(id.text, Degree::elem(path));
                } else {
                    if (!p.levels.valid_path(path))
                        err("level alias path not in declared level domain", id);
                    p.level_names.emplace_back(id.text, Level::elem(path));
                }
            } else if (t.text == "init_callperms") {
                lex_.next();
                expect_punct("=");
                expect_punct("[");
                if (!peek_punct("]")) {
                    while (true) {
                        p.init_callperms.add(parse_degree_lit(p));
                        if (peek_punct(",")) {
                            lex_.next();
                            continue;
                        }
                        break;
                    }
                }
                expect_punct("]");
            } else if (t.text == "fields") {
                lex_.next();
                while (true) {
                    Token id = lex_.next();
                    if (id.kind != Tok::Ident) err("expected field name", id);
                    expect_punct("=");
                    Token n = lex_.next();
                    if (n.kind != Tok::Int) err("expected field offset", n);
                    p.fields.emplace_back(id.text, static_cast<int>(n.num));
                    if (peek_punct(",")) {
                        lex_.next();
                        continue;
                    }
                    break;
                }
            } else {
                err("unknown header clause '" + t.text + "'");
            }
        }
        (void)have_degrees;
        (void)have_levels;
        lex_.next();  // main
        expect_punct("=");
        prog_ = &p;
        p.main = parse_expr_top(false);
        if (lex_.peek().kind != Tok::End) err("trailing input after main expression");
        auto fv = free_vars(*p.main);
        if (!fv.empty()) {
            std::string names;
            for (auto& [n, _] : fv) names += (names.empty() ? "" : ", ") + n;
            err("open main expression; free: " + names);
        }
        return p;
    }

    ExprPtr parse_bare_expr(const Prog& env, bool aux) {
        prog_env_ = &env;
        ExprPtr e = parse_expr_top(aux);
        if (lex_.peek().kind != Tok::End) err("trailing input after expression");
        return e;
    }

private:
    [[noreturn]] void err(const std::string& msg) const { err(msg, lex_.peek()); }
    [[noreturn]] void err(const std::string& msg, const Token& t) const {
        throw ParseError(msg, t.line, t.col);
    }

    bool peek_punct(const std::string& s) const {
        return lex_.peek().kind == Tok::Punct && lex_.peek().text == s;
    }
    bool peek_kw(const std::string& s) const {
        return lex_.peek().kind == Tok::Keyword && lex_.peek().text == s;
    }
    void expect_punct(const std::string& s) {
        if (!peek_punct(s)) err("expected '" + s + "'");
        lex_.next();
    }
    void expect_kw(const std::string& s) {
        if (!peek_kw(s)) err("expected '" + s + "'");
        lex_.next();
    }

    const Prog& env() const { return prog_env_ ? *prog_env_ : *prog_; }

    DomainDescriptor parse_domain() {
        if (peek_kw("atoms")) {
            lex_.next();
            expect_punct("(");
            Token n = lex_.next();
            if (n.kind != Tok::Int || n.num <= 0) err("atoms() needs a positive count", n);
            expect_punct(")");
            return DomainDescriptor::atoms(static_cast<int>(n.num));
        }
        if (peek_kw("lexsum")) {
            lex_.next();
            expect_punct("(");
            std::vector<DomainDescriptor> kids;
            kids.push_back(parse_domain());
            while (peek_punct(",")) {
                lex_.next();
                kids.push_back(parse_domain());
            }
            expect_punct(")");
            return DomainDescriptor::lexsum(std::move(kids));
        }
        err("expected 'atoms(..)' or 'lexsum(..)'");
    }

    std::vector<int> parse_path() {
        if (lex_.peek().kind == Tok::Int) {
            return {static_cast<int>(lex_.next().num)};
        }
        expect_punct("(");
        std::vector<int> p;
        while (true) {
            Token n = lex_.next();
            if (n.kind != Tok::Int) err("expected path index", n);
            p.push_back(static_cast<int>(n.num));
            if (peek_punct(",")) {
                lex_.next();
                continue;
            }
            break;
        }
        expect_punct(")");
        return p;
    }

    Degree parse_degree_lit(const Prog& p) {
        if (peek_kw("d0")) {
            lex_.next();
            return Degree::d0();
        }
        if (lex_.peek().kind == Tok::Ident) {
            Token id = lex_.next();
            auto d = p.degree_by_name(id.text);
            if (!d) err("unknown degree literal '" + id.text + "'", id);
            return *d;
        }
        Token at = lex_.peek();
        std::vector<int> path = parse_path();
        if (!p.degrees.valid_path(path)) err("degree path not in declared degree domain", at);
        return Degree::elem(path);
    }

    Level parse_level_lit(const Prog& p) {
        if (lex_.peek().kind == Tok::Ident) {
            Token id = lex_.next();
            auto l = p.level_by_name(id.text);
            if (!l) err("unknown level literal '" + id.text + "'", id);
            return *l;
        }
        Token at = lex_.peek();
        std::vector<int> path = parse_path();
        if (!p.levels.valid_path(path)) err("level path not in declared level domain", at);
        return Level::elem(path);
    }

    Binder parse_binder() {
        Token t = lex_.next();
        if (t.kind == Tok::Ident) {
            if (t.text == "_") return anon();
            return named(t.text);
        }
        err("expected a binder", t);
    }

    // ------------------------------------------------------------------
    // expressions; `aux` tracks whether we are inside auxiliary code

    ExprPtr parse_expr_top(bool aux) { return parse_seq(aux); }

    // stamps a source location on freshly built nodes (sole owner here)
    ExprPtr located(const Token& at, ExprPtr e) {
        if (e->loc.line == 0) {
            auto* m = const_cast<Expr*>(e.get());
            m->loc.line = at.line;
            m->loc.col = at.col;
        }
        return e;
    }

    ExprPtr parse_seq(bool aux) {
        Token at = lex_.peek();
        ExprPtr e = parse_stmt(aux);
        if (peek_punct(";")) {
            lex_.next();
            ExprPtr rest = parse_seq(aux);
            return located(at, mk_seq(e, rest));
        }
        return e;
    }

    ExprPtr parse_stmt(bool aux) {
        Token at = lex_.peek();
        return located(at, parse_stmt_inner(aux));
    }

    ExprPtr parse_stmt_inner(bool aux) {
        const Token& t = lex_.peek();
        if (t.kind == Tok::Keyword) {
            if (t.text == "let") return parse_let(aux);
            if (t.text == "ghost") return parse_ghost(aux);
            if (t.text == "if") return parse_if(aux);
            if (t.text == "while") return parse_while(aux);
            if (t.text == "fork") return parse_fork(aux);
            if (t.text == "match") return parse_match(aux);
            if (t.text == "rec") return parse_recfun(aux);
            if (t.text == "fun") return parse_fun(aux);
            if (t.text == "lower") return parse_lower(aux);
        }
        return parse_assign(aux);
    }

    ExprPtr parse_let(bool aux) {
        lex_.next();  // let
        bool ghost = false;
        if (peek_kw("ghost")) {
            lex_.next();
            ghost = true;
        }
        Binder x = parse_binder();
        expect_punct("=");
        ExprPtr rhs = parse_stmt(ghost || aux);
        expect_kw("in");
        ExprPtr body = parse_seq(aux);
        if (ghost && !aux) return mk_letaux(x, rhs, body);
        return mk_let(x, rhs, body);
    }

    ExprPtr parse_ghost(bool aux) {
        lex_.next();  // ghost
        if (peek_kw("let")) {
            // "ghost let x = e in e" spelling
            lex_.next();
            Binder x = parse_binder();
            expect_punct("=");
            ExprPtr rhs = parse_stmt(true);
            expect_kw("in");
            ExprPtr body = parse_seq(aux);
            if (!aux) return mk_letaux(x, rhs, body);
            return mk_let(x, rhs, body);
        }
        expect_punct("{");
        ExprPtr rhs = parse_seq(true);
        expect_punct("}");
        ExprPtr body = mk_unit();
        if (peek_punct(";")) {
            lex_.next();
            body = parse_seq(aux);
        }
        if (!aux) return mk_letaux(anon(), rhs, body);
        return mk_let(anon(), rhs, body);
    }

    ExprPtr parse_if(bool aux) {
        lex_.next();
        ExprPtr c = parse_assign(aux);
        expect_kw("then");
        ExprPtr th = parse_stmt(aux);
        expect_kw("else");
        ExprPtr el = parse_stmt(aux);
        return mk_if(c, th, el);
    }

    // while C { B }  ==>  (rec %loop _ ghost[_] = let %c = C in
    //                        if %c then (B; %loop () ghost[()]) else ()) () ghost[()]
    ExprPtr parse_while(bool aux) {
        lex_.next();
        ExprPtr cond = parse_stmt(aux);
        expect_punct("{");
        ExprPtr body = parse_seq(aux);
        expect_punct("}");
        ExprPtr again = mk_app(mk_var("%loop"), mk_unit(), {mk_unit()});
        ExprPtr rec_body =
            mk_let(named("%c"), cond,
                   mk_if(mk_var("%c"), mk_seq(body, again), mk_unit()));
        ExprPtr fn = mk_rec(named("%loop"), anon(), {anon()}, rec_body);
        return mk_app(fn, mk_unit(), {mk_unit()});
    }

    ExprPtr parse_fork(bool aux) {
        lex_.next();
        expect_punct("[");
        std::vector<ExprPtr> xs;
        if (!peek_punct("]")) {
            while (true) {
                xs.push_back(parse_assign(true));
                if (peek_punct(",")) {
                    lex_.next();
                    continue;
                }
                break;
            }
        }
        expect_punct("]");
        expect_punct("{");
        ExprPtr body = parse_seq(aux);
        expect_punct("}");
        // transfer list encoded as a right-nested pair list
        ExprPtr list = mk_unit();
        for (auto it = xs.rbegin(); it != xs.rend(); ++it)
            list = mk(ExprKind::Pair, {*it, list});
        return mk(ExprKind::Fork, {list, body});
    }

    ExprPtr parse_match(bool aux) {
        lex_.next();
        ExprPtr scrut = parse_assign(aux);
        expect_kw("with");
        expect_kw("inl");
        Binder xl = parse_binder();
        expect_punct("=>");
        ExprPtr el = parse_seq(aux);
        expect_punct("|");
        expect_kw("inr");
        Binder xr = parse_binder();
        expect_punct("=>");
        ExprPtr er = parse_seq(aux);
        expect_kw("end");
        ExprPtr armL = aux ? mk_auxlam(xl, el) : mk_rec(anon(), xl, {anon()}, el);
        ExprPtr armR = aux ? mk_auxlam(xr, er) : mk_rec(anon(), xr, {anon()}, er);
        return mk(ExprKind::Match, {scrut, armL, armR});
    }

    ExprPtr parse_recfun(bool aux) {
        (void)aux;
        lex_.next();
        Binder self = parse_binder();
        Binder param = parse_binder();
        std::vector<Binder> aux_params;
        if (peek_kw("ghost")) {
            lex_.next();
            expect_punct("[");
            while (!peek_punct("]")) aux_params.push_back(parse_binder());
            expect_punct("]");
        }
        if (aux_params.empty()) aux_params.push_back(anon());
        if (peek_punct(".")) lex_.next();
        else expect_punct("=");
        ExprPtr body = parse_seq(false);
        return mk_rec(self, param, std::move(aux_params), body);
    }

    ExprPtr parse_fun(bool aux) {
        lex_.next();
        Binder param = parse_binder();
        expect_punct(".");
        ExprPtr body = parse_seq(aux);
        if (aux) return mk_auxlam(param, body);
        return mk_rec(anon(), param, {anon()}, body);
    }

    ExprPtr parse_lower(bool aux) {
        lex_.next();
        Degree from = parse_degree_lit(env());
        expect_kw("to");
        ExprPtr n = parse_assign(aux);
        expect_kw("times");
        Degree to = parse_degree_lit(env());
        ExprPtr th = mk(ExprKind::CurrentThread);
        if (peek_kw("at")) {
            lex_.next();
            th = parse_postfix(aux);
        }
        auto e = std::make_shared<Expr>();
        e->k = ExprKind::Lower;
        e->deg = from;
        e->deg2 = to;
        e->kids = {n, th};
        return ExprPtr(e);
    }

    ExprPtr parse_assign(bool aux) {
        ExprPtr lhs = parse_cmp(aux);
        if (peek_punct(":=")) {
            lex_.next();
            ExprPtr rhs = parse_cmp(aux);
            return mk(ExprKind::Store, {lhs, rhs});
        }
        if (peek_punct(":=g")) {
            lex_.next();
            ExprPtr rhs = parse_cmp(aux);
            return mk(ExprKind::StoreA, {lhs, rhs});
        }
        return lhs;
    }

    ExprPtr parse_cmp(bool aux) {
        ExprPtr lhs = parse_add(aux);
        while (true) {
            if (peek_punct("=")) {
                lex_.next();
                lhs = mk_binop(BinOp::Eq, lhs, parse_add(aux));
            } else if (peek_punct("!=")) {
                lex_.next();
                ExprPtr eq = mk_binop(BinOp::Eq, lhs, parse_add(aux));
                lhs = mk_if(eq, mk_bool(false), mk_bool(true));
            } else if (peek_punct("<")) {
                lex_.next();
                lhs = mk_binop(BinOp::Lt, lhs, parse_add(aux));
            } else if (peek_punct("<=")) {
                lex_.next();
                lhs = mk_binop(BinOp::Le, lhs, parse_add(aux));
            } else if (peek_punct("&&")) {
                lex_.next();
                ExprPtr rhs = parse_add(aux);
                lhs = mk_if(lhs, rhs, mk_bool(false));
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_add(bool aux) {
        ExprPtr lhs = parse_unary(aux);
        while (true) {
            if (peek_punct("+")) {
                lex_.next();
                lhs = mk_binop(BinOp::Add, lhs, parse_unary(aux));
            } else if (peek_punct("-")) {
                lex_.next();
                lhs = mk_binop(BinOp::Sub, lhs, parse_unary(aux));
            } else if (peek_punct("+l")) {
                lex_.next();
                lhs = mk_binop(BinOp::PtrAdd, lhs, parse_unary(aux));
            } else if (peek_punct("%")) {
                lex_.next();
                lhs = mk_binop(BinOp::Rem, lhs, parse_unary(aux));
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_unary(bool aux) {
        if (peek_punct("-")) {
            lex_.next();
            return mk_unop(UnOp::Neg, parse_unary(aux));
        }
        if (peek_kw("not")) {
            lex_.next();
            ExprPtr e = parse_unary(aux);
            return mk_if(e, mk_bool(false), mk_bool(true));
        }
        return parse_appchain(aux);
    }

    bool starts_atom() const {
        const Token& t = lex_.peek();
        if (t.kind == Tok::Int) return true;
        if (t.kind == Tok::Ident) return true;
        if (t.kind == Tok::Punct) return t.text == "(" || t.text == "!" || t.text == "!g";
        if (t.kind == Tok::Keyword) {
            static const char* atoms[] = {"true", "false", "poison", "ref", "refg", "free",
                                          "fst", "snd", "inl", "inr", "atomic", "abort",
                                          "finish", "cur", "CurrentThread", "AllocN", "allocg",
                                          "CAS", "CmpXchg", "Xchg", "FAA", "NewSignal",
                                          "SetSignal", "NewExpectPerm", "Expect", "newproph",
                                          "resolvewith", "fun", "rec"};
            for (const char* a : atoms)
                if (t.text == a) return true;
        }
        return false;
    }

    ExprPtr parse_appchain(bool aux) {
        ExprPtr e = parse_postfix(aux);
        while (starts_atom()) {
            // "rec"/"fun" swallow to end of expression; not valid as bare arguments
            if (peek_kw("rec") || peek_kw("fun")) break;
            ExprPtr arg = parse_postfix(aux);
            if (aux) {
                e = mk_auxapp(e, arg);
            } else {
                std::vector<ExprPtr> aux_args;
                if (peek_kw("ghost")) {
                    lex_.next();
                    expect_punct("[");
                    while (!peek_punct("]")) {
                        aux_args.push_back(parse_assign(true));
                        if (peek_punct(",")) lex_.next();
                    }
                    expect_punct("]");
                }
                if (aux_args.empty()) aux_args.push_back(mk_unit());
                e = mk_app(e, arg, std::move(aux_args));
            }
        }
        return e;
    }

    ExprPtr parse_postfix(bool aux) {
        Token at = lex_.peek();
        return located(at, parse_postfix_inner(aux));
    }

    ExprPtr parse_postfix_inner(bool aux) {
        ExprPtr e = parse_atom(aux);
        while (peek_punct(".")) {
            lex_.next();
            Token id = lex_.next();
            if (id.kind != Tok::Ident) err("expected field name", id);
            auto off = env().field_by_name(id.text);
            if (!off) err("unknown field '" + id.text + "'", id);
            e = mk_binop(BinOp::PtrAdd, e, mk_int(*off));
        }
        return e;
    }

    ExprPtr parse_atom(bool aux) {
        const Token& t = lex_.peek();
        if (t.kind == Tok::Int) return mk_int(lex_.next().num);
        if (t.kind == Tok::Ident) {
            std::string name = lex_.next().text;
            if (name == "_") err("'_' is not an expression");
            return mk_var(name);
        }
        if (t.kind == Tok::Punct) {
            if (t.text == "(") {
                lex_.next();
                if (peek_punct(")")) {
                    lex_.next();
                    return mk_unit();
                }
                ExprPtr e = parse_seq(aux);
                if (peek_punct(",")) {
                    lex_.next();
                    ExprPtr e2 = parse_seq(aux);
                    expect_punct(")");
                    return mk(ExprKind::Pair, {e, e2});
                }
                expect_punct(")");
                return e;
            }
            if (t.text == "!") {
                lex_.next();
                return mk(ExprKind::Load, {parse_postfix(aux)});
            }
            if (t.text == "!g") {
                lex_.next();
                return mk(ExprKind::LoadA, {parse_postfix(aux)});
            }
        }
        if (t.kind == Tok::Keyword) {
            const std::string kw = t.text;
            if (kw == "true") { lex_.next(); return mk_bool(true); }
            if (kw == "false") { lex_.next(); return mk_bool(false); }
            if (kw == "poison") { lex_.next(); return mk_val(Val::poison()); }
            if (kw == "abort") { lex_.next(); return mk(ExprKind::Abort); }
            if (kw == "finish") { lex_.next(); return mk(ExprKind::Finish); }
            if (kw == "cur" || kw == "CurrentThread") {
                lex_.next();
                return mk(ExprKind::CurrentThread);
            }
            if (kw == "newproph") { lex_.next(); return mk(ExprKind::NewProph); }
            if (kw == "ref") {
                lex_.next();
                return mk(ExprKind::AllocN, {mk_int(1), parse_postfix(aux)});
            }
            if (kw == "refg") {
                lex_.next();
                return mk(ExprKind::AllocA, {mk_int(1), parse_postfix(aux)});
            }
            if (kw == "free") {
                lex_.next();
                return mk(ExprKind::Free, {parse_postfix(aux)});
            }
            if (kw == "fst") { lex_.next(); return mk(ExprKind::Fst, {parse_postfix(aux)}); }
            if (kw == "snd") { lex_.next(); return mk(ExprKind::Snd, {parse_postfix(aux)}); }
            if (kw == "inl") { lex_.next(); return mk(ExprKind::Inl, {parse_postfix(aux)}); }
            if (kw == "inr") { lex_.next(); return mk(ExprKind::Inr, {parse_postfix(aux)}); }
            if (kw == "atomic") {
                lex_.next();
                expect_punct("{");
                ExprPtr body = parse_seq(aux);
                expect_punct("}");
                return mk(ExprKind::Atomic, {body});
            }
            if (kw == "AllocN" || kw == "allocg") {
                lex_.next();
                expect_punct("(");
                ExprPtr a = parse_seq(aux);
                expect_punct(",");
                ExprPtr b = parse_seq(aux);
                expect_punct(")");
                return mk(kw == "AllocN" ? ExprKind::AllocN : ExprKind::AllocA, {a, b});
            }
            if (kw == "CAS" || kw == "CmpXchg") {
                lex_.next();
                expect_punct("(");
                ExprPtr a = parse_seq(aux);
                expect_punct(",");
                ExprPtr b = parse_seq(aux);
                expect_punct(",");
                ExprPtr c = parse_seq(aux);
                expect_punct(")");
                ExprPtr cx = mk(ExprKind::CmpXchg, {a, b, c});
                if (kw == "CAS") return mk(ExprKind::Snd, {cx});
                return cx;
            }
            if (kw == "Xchg" || kw == "FAA") {
                lex_.next();
                expect_punct("(");
                ExprPtr a = parse_seq(aux);
                expect_punct(",");
                ExprPtr b = parse_seq(aux);
                expect_punct(")");
                return mk(kw == "Xchg" ? ExprKind::Xchg : ExprKind::Faa, {a, b});
            }
            if (kw == "NewSignal") {
                lex_.next();
                ExprPtr th = parse_postfix(aux);
                auto e = std::make_shared<Expr>();
                e->k = ExprKind::NewSignal;
                e->lev = parse_level_lit(env());
                e->kids = {th};
                return ExprPtr(e);
            }
            if (kw == "SetSignal") {
                lex_.next();
                ExprPtr th = parse_postfix(aux);
                ExprPtr s = parse_postfix(aux);
                return mk(ExprKind::SetSignal, {th, s});
            }
            if (kw == "NewExpectPerm") {
                lex_.next();
                ExprPtr th = parse_postfix(aux);
                ExprPtr s = parse_postfix(aux);
                auto e = std::make_shared<Expr>();
                e->k = ExprKind::NewExpectPerm;
                e->deg = parse_degree_lit(env());
                e->deg2 = parse_degree_lit(env());
                e->kids = {th, s};
                return ExprPtr(e);
            }
            if (kw == "Expect") {
                lex_.next();
                ExprPtr th = parse_postfix(aux);
                ExprPtr s = parse_postfix(aux);
                auto e = std::make_shared<Expr>();
                e->k = ExprKind::Expect;
                e->deg = parse_degree_lit(env());
                e->kids = {th, s};
                return ExprPtr(e);
            }
            if (kw == "resolvewith") {
                lex_.next();
                ExprPtr a = parse_postfix(aux);
                expect_kw("at");
                ExprPtr b = parse_postfix(aux);
                expect_kw("to");
                ExprPtr c = parse_postfix(aux);
                return mk(ExprKind::ResolveWith, {a, b, c});
            }
            if (kw == "fun") return parse_fun(aux);
            if (kw == "rec") return parse_recfun(aux);
        }
        err("expected an expression");
    }

    Lexer lex_;
    Prog* prog_ = nullptr;
    const Prog* prog_env_ = nullptr;
};

}  // namespace

Prog parse(const std::string& text) {
    Parser p(text);
    return p.parse_program();
}

ExprPtr parse_expr(const std::string& text, const Prog& env, bool aux_context) {
    Parser p(text);
    return p.parse_bare_expr(env, aux_context);
}

}  // namespace hlt
