#include "beatnls/resonances.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "beatnls/errors.hpp"

namespace beat {

namespace {

std::array<int, 6> canonical(std::array<int, 6> j) {
    std::sort(j.begin(), j.begin() + 3);
    std::sort(j.begin() + 3, j.end());
    if (std::lexicographical_compare(j.begin() + 3, j.end(), j.begin(), j.begin() + 3))
        std::swap_ranges(j.begin(), j.begin() + 3, j.begin() + 3);
    return j;
}

std::int64_t checked_sq(std::int64_t x) {
    std::int64_t r;
    if (__builtin_mul_overflow(x, x, &r)) throw InvalidInput("sextuple index too large");
    return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw InvalidInput("sextuple index too large");
    return r;
}

}  // namespace

Sextuple::Sextuple(const std::array<int, 6>& j) : j_(canonical(j)) {}

Sextuple::Sextuple(std::initializer_list<int> j) {
    if (j.size() != 6) throw InvalidInput("sextuple needs exactly six indices");
    std::array<int, 6> a{};
    std::copy(j.begin(), j.end(), a.begin());
    j_ = canonical(a);
}

std::string Sextuple::str() const {
    std::ostringstream os;
    os << '(' << j_[0] << ',' << j_[1] << ',' << j_[2] << '|' << j_[3] << ',' << j_[4] << ',' << j_[5] << ')';
    return os.str();
}

TangentialSet::TangentialSet(std::vector<int> modes) : s_(std::move(modes)) {
    std::sort(s_.begin(), s_.end());
    if (std::adjacent_find(s_.begin(), s_.end()) != s_.end())
        throw InvalidInput("tangential set has duplicate modes");
}

TangentialSet::TangentialSet(std::initializer_list<int> modes) : TangentialSet(std::vector<int>(modes)) {}

bool TangentialSet::contains(int j) const { return std::binary_search(s_.begin(), s_.end(), j); }

bool is_resonant(const Sextuple& s) {
    std::int64_t mom = 0, en = 0;
    for (int i = 0; i < 6; ++i) {
        const std::int64_t sign = i < 3 ? 1 : -1;
        mom = checked_add(mom, sign * s[i]);
        en = checked_add(en, sign * checked_sq(s[i]));
    }
    return mom == 0 && en == 0;
}

bool is_trivial(const Sextuple& s) {
    if (!is_resonant(s)) throw InvalidInput("is_trivial: " + s.str() + " is not resonant");
    return s.first() == s.second();  // triples are sorted
}

int count_inside(const Sextuple& s, const TangentialSet& set) {
    int n = 0;
    for (int j : s.indices()) n += set.contains(j) ? 1 : 0;
    return n;
}

Sextuple conjugate(const Sextuple& s) {
    const auto& j = s.indices();
    return Sextuple(std::array<int, 6>{j[3], j[4], j[5], j[0], j[1], j[2]});
}

std::vector<Sextuple> enumerate_resonances(int box, const ResonanceFilter& filter, int box_limit) {
    if (box < 0) throw InvalidInput("box must be nonnegative");
    if (box > box_limit) throw InvalidInput("box " + std::to_string(box) + " exceeds limit " + std::to_string(box_limit));

    // Group sorted triples by (sum, sum of squares); resonances pair triples within a group.
    std::map<std::pair<int, int>, std::vector<std::array<int, 3>>> groups;
    for (int a = -box; a <= box; ++a)
        for (int b = a; b <= box; ++b)
            for (int c = b; c <= box; ++c) groups[{a + b + c, a * a + b * b + c * c}].push_back({a, b, c});

    std::vector<Sextuple> out;
    for (const auto& [key, triples] : groups) {
        for (std::size_t x = 0; x < triples.size(); ++x) {
            for (std::size_t y = x; y < triples.size(); ++y) {
                const auto& t1 = triples[x];
                const auto& t2 = triples[y];
                Sextuple s({t1[0], t1[1], t1[2], t2[0], t2[1], t2[2]});
                if (filter.nontrivial_only && x == y) continue;
                if (filter.set) {
                    const int in = count_inside(s, *filter.set);
                    if (in != filter.inside.value_or(6)) continue;
                }
                out.push_back(s);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<Sextuple> completeness_witness(const TangentialSet& S) {
    const auto& m = S.modes();
    const std::size_t n = m.size();
    if (n == 0) return std::nullopt;
    std::array<std::size_t, 5> idx{};
    // Odometer over S^5: (j1,j2,j3 | j4,j5,k) with k fixed by momentum.
    while (true) {
        const std::int64_t j1 = m[idx[0]], j2 = m[idx[1]], j3 = m[idx[2]], j4 = m[idx[3]], j5 = m[idx[4]];
        const std::int64_t k = j1 + j2 + j3 - j4 - j5;
        const std::int64_t en = j1 * j1 + j2 * j2 + j3 * j3 - j4 * j4 - j5 * j5 - k * k;
        if (en == 0 && !S.contains(static_cast<int>(k)))
            return Sextuple({int(j1), int(j2), int(j3), int(j4), int(j5), int(k)});
        std::size_t d = 0;
        while (d < 5 && ++idx[d] == n) idx[d++] = 0;
        if (d == 5) break;
    }
    return std::nullopt;
}

bool is_complete(const TangentialSet& S) { return !completeness_witness(S).has_value(); }

bool is_action_preserving(const TangentialSet& S) {
    if (!is_complete(S)) throw InvalidInput("is_action_preserving: set is not complete");
    const auto& m = S.modes();
    const std::size_t n = m.size();
    if (n == 0) return true;
    std::array<std::size_t, 6> idx{};
    while (true) {
        Sextuple s({m[idx[0]], m[idx[1]], m[idx[2]], m[idx[3]], m[idx[4]], m[idx[5]]});
        if (is_resonant(s) && !is_trivial(s)) return false;
        std::size_t d = 0;
        while (d < 6 && ++idx[d] == n) idx[d++] = 0;
        if (d == 6) break;
    }
    return true;
}

}  // namespace beat
