#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Well-founded degree and level universes. Domains are built as lexicographic
// sums of finite atom ranges; an element is identified by its index path into
// that tree. Degrees additionally have a distinguished global bottom (d0)
// that is strictly below every element of every domain.
namespace hlt {

enum class Cmp { LT, EQ, GT };

class OrderError : public std::runtime_error {
public:
    explicit OrderError(const std::string& what) : std::runtime_error(what) {}
};

class DomainDescriptor {
public:
    static DomainDescriptor atoms(int count);
    static DomainDescriptor lexsum(std::vector<DomainDescriptor> children);

    bool is_atoms() const { return children_.empty(); }
    int atom_count() const { return atom_count_; }
    const std::vector<DomainDescriptor>& children() const { return children_; }

    // Total number of elements (all domains here are finite).
    std::uint64_t size() const;

    // Enumerates every element path in ascending order.
    std::vector<std::vector<int>> enumerate() const;

    bool valid_path(const std::vector<int>& path) const;
    std::string to_string() const;

    bool operator==(const DomainDescriptor& o) const;

private:
    DomainDescriptor() = default;
    int atom_count_ = 0;                       // used when children_ empty
    std::vector<DomainDescriptor> children_;   // non-empty => lexsum
};

// A degree is either the global bottom d0 or an index path in the governing
// descriptor. Structural ordering (bottom first, then lexicographic path
// order) coincides with the domain order for paths of one descriptor, so
// Degree can key ordered containers directly.
struct Degree {
    bool bottom = true;
    std::vector<int> path;

    static Degree d0() { return Degree{}; }
    static Degree elem(std::vector<int> p) { return Degree{false, std::move(p)}; }

    bool operator==(const Degree& o) const { return bottom == o.bottom && path == o.path; }
    bool operator!=(const Degree& o) const { return !(*this == o); }
    bool operator<(const Degree& o) const {
        if (bottom != o.bottom) return bottom;
        return path < o.path;
    }
    std::string to_string() const;
};

struct Level {
    std::vector<int> path;

    static Level elem(std::vector<int> p) { return Level{std::move(p)}; }

    bool operator==(const Level& o) const { return path == o.path; }
    bool operator!=(const Level& o) const { return !(*this == o); }
    bool operator<(const Level& o) const { return path < o.path; }
    std::string to_string() const;
};

// Finite multiset of degrees, canonical by construction.
class DegreeMultiset {
public:
    DegreeMultiset() = default;
    DegreeMultiset(std::initializer_list<Degree> xs) {
        for (const auto& x : xs) add(x);
    }

    void add(const Degree& d, std::uint64_t n = 1);
    // Removes one occurrence; returns false if absent.
    bool remove(const Degree& d);
    std::uint64_t count(const Degree& d) const;
    std::uint64_t total() const;
    bool empty() const { return elems_.empty(); }

    DegreeMultiset set_union(const DegreeMultiset& o) const;
    // Saturating multiset difference.
    DegreeMultiset difference(const DegreeMultiset& o) const;

    const std::map<Degree, std::uint64_t>& elems() const { return elems_; }

    bool operator==(const DegreeMultiset& o) const { return elems_ == o.elems_; }
    bool operator!=(const DegreeMultiset& o) const { return !(*this == o); }
    std::string to_string() const;

private:
    std::map<Degree, std::uint64_t> elems_;
};

// Total-order comparison inside one descriptor. Bottom is strictly least.
// Throws OrderError (InvalidElement) if a path does not exist in dom.
Cmp compare(const DomainDescriptor& dom, const Degree& a, const Degree& b);
Cmp compare(const DomainDescriptor& dom, const Level& a, const Level& b);

// Order-preserving embedding of a child-domain element into a lexsum parent:
// embed(parent, i, d) = (i, d). Bottom embeds to bottom.
Degree embed(const DomainDescriptor& parent, int child_index, const Degree& d);
Level embed(const DomainDescriptor& parent, int child_index, const Level& d);

// Dershowitz-Manna order via the difference characterization:
// M < N  iff  M != N and every element of M\N is strictly below some
// element of N\M.
bool dm_less(const DomainDescriptor& dom, const DegreeMultiset& m, const DegreeMultiset& n);

// Same order using the structural degree ordering without domain validation.
// For elements of one descriptor the structural order coincides with the
// domain order; used by trace tooling, where no descriptor is available.
bool dm_less_unchecked(const DegreeMultiset& m, const DegreeMultiset& n);

// Contract check for the lower command: replacing one delta in M by n copies
// of a strictly smaller delta' must descend under dm_less.
// Throws OrderError if delta is absent from M or delta' is not below delta.
bool lower_preserves_descent(const DomainDescriptor& dom, const DegreeMultiset& m,
                             const Degree& delta, std::uint64_t n, const Degree& delta_prime);

// true iff lev is strictly below the level of every obligation in o.
bool level_below_all(const DomainDescriptor& dom, const Level& lev,
                     const std::vector<Level>& o);

}  // namespace hlt
