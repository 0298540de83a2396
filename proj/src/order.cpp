#include "hlt/order.hpp"

#include <sstream>

namespace hlt {

DomainDescriptor DomainDescriptor::atoms(int count) {
    if (count <= 0) throw OrderError("atoms() needs a positive count");
    DomainDescriptor d;
    d.atom_count_ = count;
    return d;
}

DomainDescriptor DomainDescriptor::lexsum(std::vector<DomainDescriptor> children) {
    if (children.empty()) throw OrderError("lexsum() needs at least one child");
    DomainDescriptor d;
    d.children_ = std::move(children);
    return d;
}

std::uint64_t DomainDescriptor::size() const {
    if (is_atoms()) return static_cast<std::uint64_t>(atom_count_);
    std::uint64_t n = 0;
    for (const auto& c : children_) n += c.size();
    return n;
}

std::vector<std::vector<int>> DomainDescriptor::enumerate() const {
    std::vector<std::vector<int>> out;
    if (is_atoms()) {
        for (int i = 0; i < atom_count_; ++i) out.push_back({i});
        return out;
    }
    for (int i = 0; i < static_cast<int>(children_.size()); ++i) {
        for (auto& sub : children_[i].enumerate()) {
            std::vector<int> p;
            p.reserve(sub.size() + 1);
            p.push_back(i);
            p.insert(p.end(), sub.begin(), sub.end());
            out.push_back(std::move(p));
        }
    }
    return out;
}

bool DomainDescriptor::valid_path(const std::vector<int>& path) const {
    const DomainDescriptor* cur = this;
    std::size_t i = 0;
    while (true) {
        if (i >= path.size()) return false;
        int idx = path[i];
        if (cur->is_atoms()) {
            return i + 1 == path.size() && idx >= 0 && idx < cur->atom_count_;
        }
        if (idx < 0 || idx >= static_cast<int>(cur->children_.size())) return false;
        cur = &cur->children_[idx];
        ++i;
    }
}

std::string DomainDescriptor::to_string() const {
    if (is_atoms()) return "atoms(" + std::to_string(atom_count_) + ")";
    std::string s = "lexsum(";
    for (std::size_t i = 0; i < children_.size(); ++i) {
        if (i) s += ", ";
        s += children_[i].to_string();
    }
    return s + ")";
}

bool DomainDescriptor::operator==(const DomainDescriptor& o) const {
    if (is_atoms() != o.is_atoms()) return false;
    if (is_atoms()) return atom_count_ == o.atom_count_;
    if (children_.size() != o.children_.size()) return false;
    for (std::size_t i = 0; i < children_.size(); ++i)
        if (!(children_[i] == o.children_[i])) return false;
    return true;
}

static std::string path_to_string(const std::vector<int>& p) {
    if (p.size() == 1) return std::to_string(p[0]);
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(p[i]);
    }
    return s + ")";
}

std::string Degree::to_string() const {
    if (bottom) return "d0";
    return path_to_string(path);
}

std::string Level::to_string() const { return path_to_string(path); }

void DegreeMultiset::add(const Degree& d, std::uint64_t n) {
    if (n == 0) return;
    elems_[d] += n;
}

bool DegreeMultiset::remove(const Degree& d) {
    auto it = elems_.find(d);
    if (it == elems_.end()) return false;
    if (--it->second == 0) elems_.erase(it);
    return true;
}

std::uint64_t DegreeMultiset::count(const Degree& d) const {
    auto it = elems_.find(d);
    return it == elems_.end() ? 0 : it->second;
}

std::uint64_t DegreeMultiset::total() const {
    std::uint64_t n = 0;
    for (const auto& [_, k] : elems_) n += k;
    return n;
}

DegreeMultiset DegreeMultiset::set_union(const DegreeMultiset& o) const {
    DegreeMultiset r = *this;
    for (const auto& [d, k] : o.elems_) r.add(d, k);
    return r;
}

DegreeMultiset DegreeMultiset::difference(const DegreeMultiset& o) const {
    DegreeMultiset r;
    for (const auto& [d, k] : elems_) {
        std::uint64_t sub = o.count(d);
        if (k > sub) r.add(d, k - sub);
    }
    return r;
}

std::string DegreeMultiset::to_string() const {
    std::string s = "{";
    bool first = true;
    for (const auto& [d, k] : elems_) {
        for (std::uint64_t i = 0; i < k; ++i) {
            if (!first) s += ", ";
            s += d.to_string();
            first = false;
        }
    }
    return s + "}";
}

static Cmp cmp_paths(const std::vector<int>& a, const std::vector<int>& b) {
    if (a < b) return Cmp::LT;
    if (b < a) return Cmp::GT;
    return Cmp::EQ;
}

Cmp compare(const DomainDescriptor& dom, const Degree& a, const Degree& b) {
    if (!a.bottom && !dom.valid_path(a.path))
        throw OrderError("InvalidElement: " + a.to_string() + " not in " + dom.to_string());
    if (!b.bottom && !dom.valid_path(b.path))
        throw OrderError("InvalidElement: " + b.to_string() + " not in " + dom.to_string());
    if (a.bottom && b.bottom) return Cmp::EQ;
    if (a.bottom) return Cmp::LT;
    if (b.bottom) return Cmp::GT;
    // Valid leaf paths of one descriptor compare lexicographically: they
    // diverge at a shared node and neither is a strict prefix of the other.
    return cmp_paths(a.path, b.path);
}

Cmp compare(const DomainDescriptor& dom, const Level& a, const Level& b) {
    if (!dom.valid_path(a.path))
        throw OrderError("InvalidElement: " + a.to_string() + " not in " + dom.to_string());
    if (!dom.valid_path(b.path))
        throw OrderError("InvalidElement: " + b.to_string() + " not in " + dom.to_string());
    return cmp_paths(a.path, b.path);
}

static void check_embed_target(const DomainDescriptor& parent, int child_index) {
    if (parent.is_atoms()) throw OrderError("embed: parent is not a lexsum");
    if (child_index < 0 || child_index >= static_cast<int>(parent.children().size()))
        throw OrderError("embed: child index " + std::to_string(child_index) + " out of range");
}

Degree embed(const DomainDescriptor& parent, int child_index, const Degree& d) {
    check_embed_target(parent, child_index);
    if (d.bottom) return d;
    if (!parent.children()[child_index].valid_path(d.path))
        throw OrderError("InvalidElement: " + d.to_string() + " not in child domain");
    std::vector<int> p;
    p.reserve(d.path.size() + 1);
    p.push_back(child_index);
    p.insert(p.end(), d.path.begin(), d.path.end());
    return Degree::elem(std::move(p));
}

Level embed(const DomainDescriptor& parent, int child_index, const Level& d) {
    check_embed_target(parent, child_index);
    if (!parent.children()[child_index].valid_path(d.path))
        throw OrderError("InvalidElement: " + d.to_string() + " not in child domain");
    std::vector<int> p;
    p.reserve(d.path.size() + 1);
    p.push_back(child_index);
    p.insert(p.end(), d.path.begin(), d.path.end());
    return Level::elem(std::move(p));
}

bool dm_less(const DomainDescriptor& dom, const DegreeMultiset& m, const DegreeMultiset& n) {
    for (const auto& [d, _] : m.elems())
        if (!d.bottom && !dom.valid_path(d.path))
            throw OrderError("InvalidElement: " + d.to_string() + " not in " + dom.to_string());
    for (const auto& [d, _] : n.elems())
        if (!d.bottom && !dom.valid_path(d.path))
            throw OrderError("InvalidElement: " + d.to_string() + " not in " + dom.to_string());
    if (m == n) return false;
    DegreeMultiset mOnly = m.difference(n);
    DegreeMultiset nOnly = n.difference(m);
    for (const auto& [d, _] : mOnly.elems()) {
        bool dominated = false;
        for (const auto& [e, __] : nOnly.elems()) {
            if (compare(dom, d, e) == Cmp::LT) {
                dominated = true;
                break;
            }
        }
        if (!dominated) return false;
    }
    return true;
}

bool dm_less_unchecked(const DegreeMultiset& m, const DegreeMultiset& n) {
    if (m == n) return false;
    DegreeMultiset mOnly = m.difference(n);
    DegreeMultiset nOnly = n.difference(m);
    for (const auto& [d, _] : mOnly.elems()) {
        bool dominated = false;
        for (const auto& [e, __] : nOnly.elems()) {
            if (d < e) {
                dominated = true;
                break;
            }
        }
        if (!dominated) return false;
    }
    return true;
}

bool lower_preserves_descent(const DomainDescriptor& dom, const DegreeMultiset& m,
                             const Degree& delta, std::uint64_t n, const Degree& delta_prime) {
    if (m.count(delta) == 0)
        throw OrderError("PreconditionViolated: " + delta.to_string() + " not in multiset");
    if (compare(dom, delta_prime, delta) != Cmp::LT)
        throw OrderError("PreconditionViolated: " + delta_prime.to_string() + " not below " +
                         delta.to_string());
    DegreeMultiset lowered = m;
    lowered.remove(delta);
    lowered.add(delta_prime, n);
    return dm_less(dom, lowered, m);
}

bool level_below_all(const DomainDescriptor& dom, const Level& lev,
                     const std::vector<Level>& o) {
    for (const auto& l : o)
        if (compare(dom, lev, l) != Cmp::LT) return false;
    return true;
}

}  // namespace hlt
