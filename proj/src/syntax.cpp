#include "hlt/syntax.hpp"

namespace hlt {

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t x) {
    // splitmix64 finalizer as a combiner
    h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    std::uint64_t z = h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t hash_str(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t hash_binder(const Binder& b) {
    return b ? mix(2, hash_str(*b)) : 1;
}

std::uint64_t hash_path(const std::vector<int>& p) {
    std::uint64_t h = 11;
    for (int x : p) h = mix(h, static_cast<std::uint64_t>(x) + 1);
    return h;
}

}  // namespace

bool val_equal(const Val& a, const Val& b) {
    if (a.v.index() != b.v.index()) return false;
    if (a.get<UnitV>() || a.get<PoisonV>()) return true;
    if (auto* x = a.get<IntV>()) return x->v == b.get<IntV>()->v;
    if (auto* x = a.get<BoolV>()) return x->v == b.get<BoolV>()->v;
    if (auto* x = a.get<LocV>()) return x->loc == b.get<LocV>()->loc;
    if (auto* x = a.get<SigV>()) return x->sig == b.get<SigV>()->sig;
    if (auto* x = a.get<ProphV>()) return x->id == b.get<ProphV>()->id;
    if (auto* x = a.get<std::shared_ptr<const RecClosV>>()) {
        auto& y = *b.get<std::shared_ptr<const RecClosV>>();
        return (*x)->self == y->self && (*x)->param == y->param &&
               (*x)->aux_params == y->aux_params && expr_equal((*x)->body, y->body);
    }
    if (auto* x = a.get<std::shared_ptr<const AuxClosV>>()) {
        auto& y = *b.get<std::shared_ptr<const AuxClosV>>();
        return (*x)->param == y->param && expr_equal((*x)->body, y->body);
    }
    if (auto* x = a.get<PairV>()) {
        auto* y = b.get<PairV>();
        return val_equal(*x->fst, *y->fst) && val_equal(*x->snd, *y->snd);
    }
    if (auto* x = a.get<InjV>()) {
        auto* y = b.get<InjV>();
        return x->right == y->right && val_equal(*x->payload, *y->payload);
    }
    return false;
}

std::uint64_t val_hash(const Val& v) {
    std::uint64_t h = mix(0xabcdULL, v.v.index());
    if (auto* x = v.get<IntV>()) return mix(h, static_cast<std::uint64_t>(x->v));
    if (auto* x = v.get<BoolV>()) return mix(h, x->v ? 2 : 1);
    if (auto* x = v.get<LocV>()) return mix(h, static_cast<std::uint64_t>(x->loc));
    if (auto* x = v.get<SigV>()) return mix(h, static_cast<std::uint64_t>(x->sig));
    if (auto* x = v.get<ProphV>()) return mix(h, static_cast<std::uint64_t>(x->id));
    if (auto* x = v.get<std::shared_ptr<const RecClosV>>()) {
        h = mix(h, hash_binder((*x)->self));
        h = mix(h, hash_binder((*x)->param));
        for (const auto& a : (*x)->aux_params) h = mix(h, hash_binder(a));
        return mix(h, expr_hash(*(*x)->body));
    }
    if (auto* x = v.get<std::shared_ptr<const AuxClosV>>()) {
        h = mix(h, hash_binder((*x)->param));
        return mix(h, expr_hash(*(*x)->body));
    }
    if (auto* x = v.get<PairV>()) {
        h = mix(h, val_hash(*x->fst));
        return mix(h, val_hash(*x->snd));
    }
    if (auto* x = v.get<InjV>()) {
        h = mix(h, x->right ? 2 : 1);
        return mix(h, val_hash(*x->payload));
    }
    return h;
}

ExprPtr mk(ExprKind k, std::vector<ExprPtr> kids) {
    auto e = std::make_shared<Expr>();
    e->k = k;
    e->kids = std::move(kids);
    return e;
}

ExprPtr mk_val(Val v) {
    auto e = std::make_shared<Expr>();
    e->k = ExprKind::Value;
    e->val = std::move(v);
    return e;
}

ExprPtr mk_var(std::string name) {
    auto e = std::make_shared<Expr>();
    e->k = ExprKind::Var;
    e->var = std::move(name);
    return e;
}

ExprPtr mk_unit() { return mk_val(Val::unit()); }
ExprPtr mk_int(std::int64_t n) { return mk_val(Val::integer(n)); }
ExprPtr mk_bool(bool b) { return mk_val(Val::boolean(b)); }

ExprPtr mk_rec(Binder self, Binder param, std::vector<Binder> aux_params, ExprPtr body) {
    auto e = std::make_shared<Expr>();
    e->k = ExprKind::Rec;
    e->self = std::move(self);
    e->bind = std::move(param);
    e->aux_binds = std::move(aux_params);
    e->kids = {std::move(body)};
    return e;
}

ExprPtr mk_auxlam(Binder param, ExprPtr body) {
    auto e = std::make_shared<Expr>();
    e->k = ExprKind::AuxLam;
    e->bind = std::move(param);
    e->kids = {std::move(body)};
    return e;
}

ExprPtr mk_app(ExprPtr fn, ExprPtr arg, std::vector<ExprPtr> aux_args) {
    std::vector<ExprPtr> kids = {std::move(fn), std::move(arg)};
    for (auto& a : aux_args) kids.push_back(std::move(a));
    return mk(ExprKind::App, std::move(kids));
}

ExprPtr mk_auxapp(ExprPtr fn, ExprPtr arg) {
    return mk(ExprKind::AuxApp, {std::move(fn), std::move(arg)});
}

ExprPtr mk_binop(BinOp op, ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->k = ExprKind::BinaryOp;
    e->bin = op;
    e->kids = {std::move(a), std::move(b)};
    return e;
}

ExprPtr mk_unop(UnOp op, ExprPtr a) {
    auto e = std::make_shared<Expr>();
    e->k = ExprKind::UnaryOp;
    e->un = op;
    e->kids = {std::move(a)};
    return e;
}

ExprPtr mk_if(ExprPtr c, ExprPtr t, ExprPtr e) {
    return mk(ExprKind::If, {std::move(c), std::move(t), std::move(e)});
}

ExprPtr mk_let(Binder x, ExprPtr rhs, ExprPtr body) {
    auto e = std::make_shared<Expr>();
    e->k = ExprKind::Let;
    e->bind = std::move(x);
    e->kids = {std::move(rhs), std::move(body)};
    return e;
}

ExprPtr mk_letaux(Binder x, ExprPtr rhs, ExprPtr body) {
    auto e = std::make_shared<Expr>();
    e->k = ExprKind::LetAux;
    e->bind = std::move(x);
    e->kids = {std::move(rhs), std::move(body)};
    return e;
}

ExprPtr mk_seq(ExprPtr a, ExprPtr b) { return mk_let(anon(), std::move(a), std::move(b)); }

bool is_value(const Expr& e) { return e.k == ExprKind::Value; }

bool expr_equal(const Expr& a, const Expr& b) {
    if (a.k != b.k) return false;
    if (a.kids.size() != b.kids.size()) return false;
    switch (a.k) {
        case ExprKind::Value:
            if (!val_equal(a.val, b.val)) return false;
            break;
        case ExprKind::Var:
            if (a.var != b.var) return false;
            break;
        case ExprKind::Rec:
            if (a.self != b.self || a.bind != b.bind || a.aux_binds != b.aux_binds) return false;
            break;
        case ExprKind::AuxLam:
        case ExprKind::Let:
        case ExprKind::LetAux:
            if (a.bind != b.bind) return false;
            break;
        case ExprKind::UnaryOp:
            if (a.un != b.un) return false;
            break;
        case ExprKind::BinaryOp:
            if (a.bin != b.bin) return false;
            break;
        case ExprKind::NewSignal:
            if (a.lev != b.lev) return false;
            break;
        case ExprKind::NewExpectPerm:
        case ExprKind::Lower:
            if (a.deg != b.deg || a.deg2 != b.deg2) return false;
            break;
        case ExprKind::Expect:
            if (a.deg != b.deg) return false;
            break;
        default:
            break;
    }
    for (std::size_t i = 0; i < a.kids.size(); ++i)
        if (!expr_equal(*a.kids[i], *b.kids[i])) return false;
    return true;
}

std::uint64_t expr_hash(const Expr& e) {
    std::uint64_t h = mix(0x517cc1b7ULL, static_cast<std::uint64_t>(e.k));
    switch (e.k) {
        case ExprKind::Value:
            h = mix(h, val_hash(e.val));
            break;
        case ExprKind::Var:
            h = mix(h, hash_str(e.var));
            break;
        case ExprKind::Rec:
            h = mix(h, hash_binder(e.self));
            h = mix(h, hash_binder(e.bind));
            for (const auto& a : e.aux_binds) h = mix(h, hash_binder(a));
            break;
        case ExprKind::AuxLam:
        case ExprKind::Let:
        case ExprKind::LetAux:
            h = mix(h, hash_binder(e.bind));
            break;
        case ExprKind::UnaryOp:
            h = mix(h, static_cast<std::uint64_t>(e.un));
            break;
        case ExprKind::BinaryOp:
            h = mix(h, static_cast<std::uint64_t>(e.bin));
            break;
        case ExprKind::NewSignal:
            h = mix(h, hash_path(e.lev.path));
            break;
        case ExprKind::NewExpectPerm:
        case ExprKind::Lower:
            h = mix(h, e.deg.bottom ? 7 : hash_path(e.deg.path));
            h = mix(h, e.deg2.bottom ? 7 : hash_path(e.deg2.path));
            break;
        case ExprKind::Expect:
            h = mix(h, e.deg.bottom ? 7 : hash_path(e.deg.path));
            break;
        default:
            break;
    }
    for (const auto& kid : e.kids) h = mix(h, expr_hash(*kid));
    return h;
}

namespace {

void free_vars_rec(const Expr& e, std::map<std::string, int>& acc,
                   std::map<std::string, int>& bound) {
    auto enter = [&](const Binder& b) {
        if (b) bound[*b]++;
    };
    auto leave = [&](const Binder& b) {
        if (b) bound[*b]--;
    };
    switch (e.k) {
        case ExprKind::Value: {
            // closure bodies may mention outer variables before substitution
            if (auto* rc = e.val.get<std::shared_ptr<const RecClosV>>()) {
                enter((*rc)->self);
                enter((*rc)->param);
                for (const auto& a : (*rc)->aux_params) enter(a);
                free_vars_rec(*(*rc)->body, acc, bound);
                for (const auto& a : (*rc)->aux_params) leave(a);
                leave((*rc)->param);
                leave((*rc)->self);
            } else if (auto* ac = e.val.get<std::shared_ptr<const AuxClosV>>()) {
                enter((*ac)->param);
                free_vars_rec(*(*ac)->body, acc, bound);
                leave((*ac)->param);
            }
            return;
        }
        case ExprKind::Var:
            if (bound[e.var] <= 0) acc[e.var]++;
            return;
        case ExprKind::Rec:
            enter(e.self);
            enter(e.bind);
            for (const auto& a : e.aux_binds) enter(a);
            free_vars_rec(*e.kids[0], acc, bound);
            for (const auto& a : e.aux_binds) leave(a);
            leave(e.bind);
            leave(e.self);
            return;
        case ExprKind::AuxLam:
            enter(e.bind);
            free_vars_rec(*e.kids[0], acc, bound);
            leave(e.bind);
            return;
        case ExprKind::Let:
        case ExprKind::LetAux:
            free_vars_rec(*e.kids[0], acc, bound);
            enter(e.bind);
            free_vars_rec(*e.kids[1], acc, bound);
            leave(e.bind);
            return;
        default:
            for (const auto& kid : e.kids) free_vars_rec(*kid, acc, bound);
            return;
    }
}

}  // namespace

std::map<std::string, int> free_vars(const Expr& e) {
    std::map<std::string, int> acc, bound;
    free_vars_rec(e, acc, bound);
    return acc;
}

namespace {

ExprPtr subst_rec(const ExprPtr& e, const std::string& x, const Val& v);

ExprPtr subst_val_node(const ExprPtr& e, const std::string& x, const Val& v) {
    // substitute inside closure bodies stored in value position
    if (auto* rc = e->val.get<std::shared_ptr<const RecClosV>>()) {
        const auto& c = **rc;
        bool shadowed = (c.self && *c.self == x) || (c.param && *c.param == x);
        for (const auto& a : c.aux_params)
            if (a && *a == x) shadowed = true;
        if (shadowed) return e;
        ExprPtr nb = subst_rec(c.body, x, v);
        if (nb == c.body) return e;
        auto nc = std::make_shared<RecClosV>(c);
        nc->body = nb;
        return mk_val(Val(std::shared_ptr<const RecClosV>(nc)));
    }
    if (auto* ac = e->val.get<std::shared_ptr<const AuxClosV>>()) {
        const auto& c = **ac;
        if (c.param && *c.param == x) return e;
        ExprPtr nb = subst_rec(c.body, x, v);
        if (nb == c.body) return e;
        auto nc = std::make_shared<AuxClosV>(c);
        nc->body = nb;
        return mk_val(Val(std::shared_ptr<const AuxClosV>(nc)));
    }
    return e;
}

ExprPtr subst_rec(const ExprPtr& e, const std::string& x, const Val& v) {
    switch (e->k) {
        case ExprKind::Value:
            return subst_val_node(e, x, v);
        case ExprKind::Var:
            if (e->var == x) return mk_val(v);
            return e;
        case ExprKind::Rec: {
            bool shadowed = (e->self && *e->self == x) || (e->bind && *e->bind == x);
            for (const auto& a : e->aux_binds)
                if (a && *a == x) shadowed = true;
            if (shadowed) return e;
            break;
        }
        case ExprKind::AuxLam:
            if (e->bind && *e->bind == x) return e;
            break;
        case ExprKind::Let:
        case ExprKind::LetAux: {
            ExprPtr rhs = subst_rec(e->kids[0], x, v);
            ExprPtr body = (e->bind && *e->bind == x) ? e->kids[1] : subst_rec(e->kids[1], x, v);
            if (rhs == e->kids[0] && body == e->kids[1]) return e;
            auto ne = std::make_shared<Expr>(*e);
            ne->kids = {rhs, body};
            return ne;
        }
        default:
            break;
    }
    bool changed = false;
    std::vector<ExprPtr> kids;
    kids.reserve(e->kids.size());
    for (const auto& kid : e->kids) {
        ExprPtr nk = subst_rec(kid, x, v);
        changed |= (nk != kid);
        kids.push_back(nk);
    }
    if (!changed) return e;
    auto ne = std::make_shared<Expr>(*e);
    ne->kids = std::move(kids);
    return ne;
}

}  // namespace

ExprPtr substitute(const ExprPtr& e, const Binder& x, const Val& v) {
    if (!x) return e;
    return subst_rec(e, *x, v);
}

std::optional<Degree> Prog::degree_by_name(const std::string& n) const {
    if (n == "d0") return Degree::d0();
    for (const auto& [name, d] : degree_names)
        if (name == n) return d;
    return std::nullopt;
}

std::optional<Level> Prog::level_by_name(const std::string& n) const {
    for (const auto& [name, l] : level_names)
        if (name == n) return l;
    return std::nullopt;
}

std::optional<int> Prog::field_by_name(const std::string& n) const {
    for (const auto& [name, off] : fields)
        if (name == n) return off;
    return std::nullopt;
}

}  // namespace hlt
