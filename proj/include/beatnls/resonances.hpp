#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

namespace beat {

// Six mode indices j1..j6 of a degree-6 monomial u_{j1}u_{j2}u_{j3} ū_{j4}ū_{j5}ū_{j6}.
// Held in canonical order: each triple sorted ascending, then the two triples
// ordered lexicographically.
class Sextuple {
public:
    Sextuple() = default;
    explicit Sextuple(const std::array<int, 6>& j);
    Sextuple(std::initializer_list<int> j);

    const std::array<int, 6>& indices() const { return j_; }
    int operator[](std::size_t i) const { return j_[i]; }
    std::array<int, 3> first() const { return {j_[0], j_[1], j_[2]}; }
    std::array<int, 3> second() const { return {j_[3], j_[4], j_[5]}; }

    std::string str() const;

    friend bool operator==(const Sextuple&, const Sextuple&) = default;
    friend auto operator<=>(const Sextuple&, const Sextuple&) = default;

private:
    std::array<int, 6> j_{};
};

class TangentialSet {
public:
    TangentialSet() = default;
    explicit TangentialSet(std::vector<int> modes);  // sorted on input, duplicates rejected
    TangentialSet(std::initializer_list<int> modes);

    const std::vector<int>& modes() const { return s_; }
    bool contains(int j) const;
    std::size_t size() const { return s_.size(); }

    static TangentialSet paper_default() { return TangentialSet{-2, -1, 1, 2}; }

    friend bool operator==(const TangentialSet&, const TangentialSet&) = default;

private:
    std::vector<int> s_;
};

bool is_resonant(const Sextuple& s);
bool is_trivial(const Sextuple& s);  // throws InvalidInput on non-resonant input

// Count-based filter: `inside` = number of the six slots with index in `set`.
// With a set and no count, all six slots must lie in the set.
struct ResonanceFilter {
    std::optional<TangentialSet> set;
    std::optional<int> inside;
    bool nontrivial_only = false;
};

inline constexpr int kDefaultBoxLimit = 32;

std::vector<Sextuple> enumerate_resonances(int box, const ResonanceFilter& filter = {},
                                           int box_limit = kDefaultBoxLimit);

int count_inside(const Sextuple& s, const TangentialSet& set);

// Orbit representative under swapping the two triples (the complex conjugate monomial).
Sextuple conjugate(const Sextuple& s);

bool is_complete(const TangentialSet& S);
bool is_action_preserving(const TangentialSet& S);  // throws InvalidInput on incomplete S

// First k in S^5 completion that leaves S; empty when S is complete.
std::optional<Sextuple> completeness_witness(const TangentialSet& S);

}  // namespace beat
