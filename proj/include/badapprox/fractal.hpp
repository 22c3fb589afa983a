#pragma once

// Supports K with their measures: the unit cube with Lebesgue measure and
// attractors of axis-aligned equicontractive IFS on a b-adic grid with their
// natural self-similar measures. Balls are sup-norm boxes.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "badapprox/certified.hpp"

namespace badapprox {

struct SimilarityMap {
    Rational ratio;
    std::vector<Rational> translation;
};

enum class SupportKind { cube, ifs };

struct Support {
    SupportKind kind = SupportKind::cube;
    int n = 1;
    std::string name;
    std::vector<SimilarityMap> maps; // empty for the cube
    CertifiedReal delta;
    // grid description: every map is x -> (x + digit)/base
    long base = 2;
    std::vector<std::vector<long>> digits;
    bool faces_null = true;        // hyperplanes x_i = c carry no mass
    bool delta_above_codim = true; // delta > n - 1

    std::size_t map_count() const { return digits.size(); }
};

class OpenSetViolation : public Error {
public:
    OpenSetViolation(const std::string& what, std::size_t a, std::size_t b) : Error(what), first(a), second(b) {}
    std::size_t first;
    std::size_t second;
};

/// Sup-norm ball: center +- half in every coordinate.
struct Box {
    std::vector<Rational> center;
    Rational half;
};

namespace detail {

inline void finish_delta(Support& s)
{
    // delta = log N / log b; exact when N is a power of b
    const auto N = static_cast<unsigned long>(s.map_count());
    Integer p = 1;
    unsigned long e = 0;
    while (p < N) {
        p *= s.base;
        ++e;
    }
    if (p == N)
        s.delta = CertifiedReal(Rational(static_cast<long>(e)));
    else
        s.delta = log(CertifiedReal(Rational(static_cast<long>(N))), 256) /
                  log(CertifiedReal(Rational(s.base)), 256);
    s.delta_above_codim = Integer(static_cast<unsigned long>(N)) > pow_int(Integer(s.base), s.n - 1);
    s.faces_null = true;
    for (int i = 0; i < s.n; ++i) {
        bool varies = false;
        for (const auto& d : s.digits) varies = varies || d[i] != s.digits[0][i];
        s.faces_null = s.faces_null && varies;
    }
}

} // namespace detail

inline Support make_cube(int n)
{
    if (n < 1 || n > 8) throw ContractViolation("cube dimension must be in [1, 8]");
    Support s;
    s.kind = SupportKind::cube;
    s.n = n;
    s.name = "cube" + std::to_string(n);
    s.base = 2;
    for (long code = 0; code < (1L << n); ++code) {
        std::vector<long> d(n);
        for (int i = 0; i < n; ++i) d[i] = (code >> (n - 1 - i)) & 1;
        s.digits.push_back(d);
    }
    detail::finish_delta(s);
    return s;
}

/// Axis-aligned equicontractive IFS; checks the open set condition on [0,1]^n.
inline Support make_ifs(int n, std::vector<SimilarityMap> maps, std::string name = "ifs")
{
    if (n < 1) throw ContractViolation("IFS dimension must be >= 1");
    if (maps.size() < 2) throw ContractViolation("IFS needs at least two maps");
    const Rational r = maps[0].ratio;
    for (std::size_t a = 0; a < maps.size(); ++a) {
        const auto& f = maps[a];
        if (f.ratio != r) throw ContractViolation("only equicontractive systems are supported");
        if (f.translation.size() != static_cast<std::size_t>(n))
            throw ContractViolation("translation length does not match n");
        for (const auto& t : f.translation)
            if (t < 0 || t + r > 1) throw OpenSetViolation("map image leaves [0,1]^n", a, a);
    }
    if (r <= 0 || r >= 1 || r.get_num() != 1)
        throw ContractViolation("ratio must be 1/b with b >= 2 an integer");
    // pairwise interiors of images must be disjoint
    for (std::size_t a = 0; a < maps.size(); ++a)
        for (std::size_t b = a + 1; b < maps.size(); ++b) {
            bool overlap = true;
            for (int i = 0; i < n; ++i) {
                Rational d = maps[a].translation[i] - maps[b].translation[i];
                if (d < 0) d = -d;
                overlap = overlap && d < r;
            }
            if (overlap) throw OpenSetViolation("images of maps overlap", a, b);
        }
    Support s;
    s.kind = SupportKind::ifs;
    s.n = n;
    s.name = std::move(name);
    s.base = r.get_den().get_si();
    for (const auto& f : maps) {
        std::vector<long> d(n);
        for (int i = 0; i < n; ++i) {
            Rational t = f.translation[i] * s.base;
            if (t.get_den() != 1) throw ContractViolation("translations must lie on the 1/b grid");
            d[i] = t.get_num().get_si();
        }
        s.digits.push_back(d);
    }
    s.maps = std::move(maps);
    detail::finish_delta(s);
    return s;
}

inline Support make_cantor()
{
    return make_ifs(1, {{Rational(1, 3), {Rational(0)}}, {Rational(1, 3), {Rational(2, 3)}}}, "cantor");
}

inline Support make_carpet()
{
    std::vector<SimilarityMap> maps;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != 1 || j != 1) maps.push_back({Rational(1, 3), {Rational(i, 3), Rational(j, 3)}});
    return make_ifs(2, std::move(maps), "carpet");
}

/// Presets: cube<n>, cantor, carpet.
inline Support make_support(const std::string& name)
{
    if (name == "cantor") return make_cantor();
    if (name == "carpet") return make_carpet();
    if (name.rfind("cube", 0) == 0 && name.size() > 4) return make_cube(std::stoi(name.substr(4)));
    throw ParseError("unknown support preset: " + name);
}

// ------------------------------------------------------------- measures

namespace detail {

/// Measure of the closed box [lo, hi] under the natural measure, by cylinder classification.
inline CertifiedReal cylinder_box_measure(const Support& s, const std::vector<Rational>& lo,
                                          const std::vector<Rational>& hi, int max_depth)
{
    const int n = s.n;
    const Rational inv_b(1, s.base);
    const Rational child_mass(1, static_cast<long>(s.map_count()));
    Rational acc_lo = 0, acc_hi = 0;
    std::vector<Rational> corner(n, Rational(0));
    std::function<void(std::vector<Rational>&, const Rational&, const Rational&, int)> walk =
        [&](std::vector<Rational>& c, const Rational& side, const Rational& mass, int depth) {
            bool inside = true, interior = true, touch = true;
            for (int i = 0; i < n; ++i) {
                Rational top = c[i] + side;
                inside = inside && lo[i] <= c[i] && top <= hi[i];
                interior = interior && c[i] < hi[i] && lo[i] < top;
                touch = touch && c[i] <= hi[i] && lo[i] <= top;
            }
            if (inside) {
                acc_lo += mass;
                acc_hi += mass;
                return;
            }
            if (!interior) {
                if (touch && !s.faces_null) acc_hi += mass;
                return;
            }
            if (depth == max_depth) {
                acc_hi += mass;
                return;
            }
            Rational sub = side * inv_b;
            Rational sub_mass = mass * child_mass;
            std::vector<Rational> cc(n);
            for (const auto& d : s.digits) {
                for (int i = 0; i < n; ++i) cc[i] = c[i] + sub * d[i];
                walk(cc, sub, sub_mass, depth + 1);
            }
        };
    walk(corner, Rational(1), Rational(1), 0);
    return CertifiedReal::enclose(acc_lo, acc_hi);
}

} // namespace detail

/// mu(B) for a sup-norm ball: exact for the cube and for cylinder-aligned balls, else an enclosure.
inline CertifiedReal ball_measure(const Support& s, const Box& b, int max_depth = 12)
{
    if (b.center.size() != static_cast<std::size_t>(s.n)) throw ContractViolation("ball dimension mismatch");
    if (b.half < 0) throw ContractViolation("negative radius");
    std::vector<Rational> lo(s.n), hi(s.n);
    for (int i = 0; i < s.n; ++i) {
        lo[i] = b.center[i] - b.half;
        hi[i] = b.center[i] + b.half;
    }
    if (s.kind == SupportKind::cube) {
        Rational v = 1;
        for (int i = 0; i < s.n; ++i) {
            Rational a = std::max(lo[i], Rational(0));
            Rational c = std::min(hi[i], Rational(1));
            v *= c > a ? Rational(c - a) : Rational(0);
        }
        return CertifiedReal(v);
    }
    return detail::cylinder_box_measure(s, lo, hi, max_depth);
}

/// The depth-d cylinder with the given digit path, as its circumscribed box.
inline Box cylinder_box(const Support& s, const std::vector<std::size_t>& path)
{
    Box b;
    b.center.assign(s.n, Rational(0));
    Rational side = 1;
    for (auto idx : path) {
        side /= s.base;
        for (int i = 0; i < s.n; ++i) b.center[i] += side * s.digits.at(idx)[i];
    }
    b.half = side / 2;
    for (auto& c : b.center) c += b.half;
    return b;
}

// ------------------------------------------------------------- children

/// Exponent t with k = base^t, or -1 when k is not a power of the base.
inline int grid_exponent(const Support& s, long k)
{
    if (k < 2) return -1;
    int t = 0;
    long p = 1;
    while (p < k) {
        if (p > k / s.base) return -1;
        p *= s.base;
        ++t;
    }
    return p == k ? t : -1;
}

/// Half-side of the level-m node theta * k^-m.
inline Rational node_half(long k, int level)
{
    Rational h(1, 2 * k);
    for (int i = 0; i < level; ++i) h /= k;
    return h;
}

/// Level-0 node: the first cylinder of side 1/k.
inline Box root_node(const Support& s, long k)
{
    Box b;
    b.half = node_half(k, 0);
    b.center.assign(s.n, b.half);
    if (s.kind == SupportKind::ifs) {
        int t = grid_exponent(s, k);
        if (t < 0) throw ContractViolation("k must be a power of the IFS base");
        b = cylinder_box(s, std::vector<std::size_t>(t, 0));
    }
    return b;
}

/// Offsets of the children of a level-m node relative to its center, and the
/// child ball half-side. Cube: a grid packing of floor(k/2)^n boxes of half-side
/// 2 theta k^-(m+1). IFS: the depth-t sub-cylinders (k = b^t), which are the balls.
struct ChildPattern {
    std::vector<std::vector<Rational>> offsets;
    Rational ball_half;
    Rational node_half; // half-side of each child's own node at level m+1
};

inline ChildPattern child_pattern(const Support& s, long k, int level, const Rational& theta)
{
    if (theta != Rational(1, 2 * k)) throw ContractViolation("theta must equal 1/(2k)");
    if (k < 2) throw ContractViolation("k must be >= 2");
    ChildPattern p;
    const Rational h = node_half(k, level);
    p.node_half = node_half(k, level + 1);
    const int n = s.n;
    if (s.kind == SupportKind::cube) {
        const long g = k / 2;
        p.ball_half = 2 * p.node_half;
        std::vector<long> idx(n, 0);
        while (true) {
            std::vector<Rational> off(n);
            for (int i = 0; i < n; ++i) off[i] = -h + p.ball_half * (2 * idx[i] + 1);
            p.offsets.push_back(std::move(off));
            int i = n - 1;
            while (i >= 0 && ++idx[i] == g) idx[i--] = 0;
            if (i < 0) break;
        }
        return p;
    }
    int t = grid_exponent(s, k);
    if (t < 0) throw ContractViolation("k must be a power of the IFS base");
    p.ball_half = p.node_half;
    // all digit paths of length t
    std::vector<std::size_t> path(t, 0);
    const std::size_t N = s.map_count();
    while (true) {
        Box c = cylinder_box(s, path);
        // cylinder_box is relative to [0,1]^n; rescale into the node of side 2h
        std::vector<Rational> off(n);
        for (int i = 0; i < n; ++i) off[i] = (c.center[i] - Rational(1, 2)) * (2 * h);
        p.offsets.push_back(std::move(off));
        int i = t - 1;
        while (i >= 0 && ++path[i] == N) path[i--] = 0;
        if (i < 0) break;
    }
    return p;
}

/// Children balls of node b at the given level.
inline std::vector<Box> children(const Support& s, const Box& b, int level, long k, const Rational& theta)
{
    auto p = child_pattern(s, k, level, theta);
    std::vector<Box> out;
    out.reserve(p.offsets.size());
    for (const auto& off : p.offsets) {
        Box c;
        c.half = p.ball_half;
        c.center.resize(s.n);
        for (int i = 0; i < s.n; ++i) c.center[i] = b.center[i] + off[i];
        out.push_back(std::move(c));
    }
    return out;
}

/// kappa_1 estimate: children per node divided by k^delta.
inline double kappa1_hat(const Support& s, long k)
{
    if (s.kind == SupportKind::cube) return std::pow(static_cast<double>(k / 2) / static_cast<double>(k), s.n);
    return 1.0;
}

// ------------------------------------------------------------ estimators

namespace detail {

struct DoubleBox {
    std::vector<double> lo, hi;
};

enum class Overlap { inside, outside, partial };

/// Approximate measure of a region by cylinder recursion; partial leaves
/// contribute mass times the region's estimated fraction of the leaf.
template <class Classify, class Fraction>
double region_measure(const Support& s, Classify&& classify, Fraction&& fraction, double leaf_side)
{
    const int n = s.n;
    const double inv_b = 1.0 / static_cast<double>(s.base);
    const double child_mass = 1.0 / static_cast<double>(s.map_count());
    double total = 0;
    std::vector<double> corner(n, 0.0);
    std::function<void(const std::vector<double>&, double, double, int)> walk =
        [&](const std::vector<double>& c, double side, double mass, int depth) {
            Overlap o = classify(c, side);
            if (o == Overlap::outside) return;
            if (o == Overlap::inside) {
                total += mass;
                return;
            }
            if (side <= leaf_side || depth >= 60) {
                total += mass * fraction(c, side);
                return;
            }
            double sub = side * inv_b;
            std::vector<double> cc(n);
            for (const auto& d : s.digits) {
                for (int i = 0; i < n; ++i) cc[i] = c[i] + sub * static_cast<double>(d[i]);
                walk(cc, sub, mass * child_mass, depth + 1);
            }
        };
    walk(corner, 1.0, 1.0, 0);
    return total;
}

inline std::vector<double> random_point(const Support& s, std::mt19937_64& rng)
{
    std::vector<double> x(s.n, 0.0);
    if (s.kind == SupportKind::cube) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& v : x) v = u(rng);
        return x;
    }
    std::uniform_int_distribution<std::size_t> pick(0, s.map_count() - 1);
    double scale = 1.0;
    for (int level = 0; level < 48 && scale > 1e-300; ++level) {
        scale /= static_cast<double>(s.base);
        const auto& d = s.digits[pick(rng)];
        for (int i = 0; i < s.n; ++i) x[i] += scale * static_cast<double>(d[i]);
    }
    return x;
}

inline double box_measure_approx(const Support& s, const std::vector<double>& center, double r)
{
    const int n = s.n;
    auto classify = [&](const std::vector<double>& c, double side) {
        bool inside = true;
        for (int i = 0; i < n; ++i) {
            double lo = center[i] - r, hi = center[i] + r;
            if (c[i] >= hi || c[i] + side <= lo) return Overlap::outside;
            inside = inside && lo <= c[i] && c[i] + side <= hi;
        }
        return inside ? Overlap::inside : Overlap::partial;
    };
    auto fraction = [&](const std::vector<double>& c, double side) {
        double f = 1;
        for (int i = 0; i < n; ++i) {
            double a = std::max(c[i], center[i] - r), b = std::min(c[i] + side, center[i] + r);
            f *= std::max(0.0, b - a) / side;
        }
        return f;
    };
    return region_measure(s, classify, fraction, r / 64);
}

/// mu(B(center, r) intersect {x : |u.x - a| <= eps}) approximately.
inline double slab_measure_approx(const Support& s, const std::vector<double>& center, double r,
                                  const std::vector<double>& u, double a, double eps)
{
    const int n = s.n;
    auto proj = [&](const std::vector<double>& c, double side, double& lo, double& hi) {
        lo = hi = 0;
        for (int i = 0; i < n; ++i) {
            double p = u[i] * c[i], q = u[i] * (c[i] + side);
            lo += std::min(p, q);
            hi += std::max(p, q);
        }
    };
    auto classify = [&](const std::vector<double>& c, double side) {
        bool inside = true;
        for (int i = 0; i < n; ++i) {
            double lo = center[i] - r, hi = center[i] + r;
            if (c[i] >= hi || c[i] + side <= lo) return Overlap::outside;
            inside = inside && lo <= c[i] && c[i] + side <= hi;
        }
        double plo, phi;
        proj(c, side, plo, phi);
        if (phi < a - eps || plo > a + eps) return Overlap::outside;
        inside = inside && plo >= a - eps && phi <= a + eps;
        return inside ? Overlap::inside : Overlap::partial;
    };
    auto fraction = [&](const std::vector<double>& c, double side) {
        double f = 1;
        for (int i = 0; i < n; ++i) {
            double lo = std::max(c[i], center[i] - r), hi = std::min(c[i] + side, center[i] + r);
            f *= std::max(0.0, hi - lo) / side;
        }
        double plo, phi;
        proj(c, side, plo, phi);
        double w = phi - plo;
        double g = w > 0 ? std::max(0.0, std::min(phi, a + eps) - std::max(plo, a - eps)) / w : 1.0;
        return f * g;
    };
    return region_measure(s, classify, fraction, std::min(r, eps) / 8);
}

inline void least_squares(const std::vector<double>& x, const std::vector<double>& y, double& slope,
                          double& intercept, double& slope_err)
{
    const double m = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double den = m * sxx - sx * sx;
    slope = den != 0 ? (m * sxy - sx * sy) / den : 0;
    intercept = (sy - slope * sx) / m;
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = y[i] - (intercept + slope * x[i]);
        rss += e * e;
    }
    double var_x = sxx - sx * sx / m;
    slope_err = (m > 2 && var_x > 0) ? std::sqrt(rss / (m - 2) / var_x) : 0;
}

} // namespace detail

struct AhlforsEstimate {
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    double delta_hat = 0;
    double delta_err = 0; // standard error of the slope
    double a_hat = 0;
    double b_hat = 0;
    std::vector<std::pair<double, double>> points; // (radius, measure)
};

/// Regression of log mu(B(c, r)) on log r, c random in K, r log-uniform in [1e-4, 1e-1].
inline AhlforsEstimate estimate_ahlfors(const Support& s, std::size_t samples, std::uint64_t seed)
{
    if (samples < 100) throw ContractViolation("estimate_ahlfors needs at least 100 samples");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> lr(std::log(1e-4), std::log(1e-1));
    AhlforsEstimate out;
    out.seed = seed;
    out.samples = samples;
    const double delta = s.delta.to_double();
    std::vector<double> xs, ys;
    out.a_hat = INFINITY;
    out.b_hat = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        auto c = detail::random_point(s, rng);
        double r = std::exp(lr(rng));
        double mu = detail::box_measure_approx(s, c, r);
        if (mu <= 0) continue;
        out.points.emplace_back(r, mu);
        xs.push_back(std::log(r));
        ys.push_back(std::log(mu));
        double ratio = mu / std::pow(r, delta);
        out.a_hat = std::min(out.a_hat, ratio);
        out.b_hat = std::max(out.b_hat, ratio);
    }
    double intercept;
    detail::least_squares(xs, ys, out.delta_hat, intercept, out.delta_err);
    return out;
}

struct DecayBin {
    double log_ratio = 0;   // mean log10(eps/r) in the bin
    double max_fraction = 0; // max mu(B cap slab)/mu(B)
    std::size_t count = 0;
};

struct DecayEstimate {
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    double alpha_hat = 0;
    double C_hat = 0; // max fraction / (eps/r)^alpha_hat over all samples
    std::vector<DecayBin> bins;
};

/// Fit of mu(B cap L^eps)/mu(B) <= C (eps/r)^alpha over random balls and hyperplanes.
inline DecayEstimate estimate_decay(const Support& s, std::size_t samples, std::uint64_t seed)
{
    if (samples < 100) throw ContractViolation("estimate_decay needs at least 100 samples");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> lr(std::log(1e-3), std::log(1e-1));
    std::uniform_real_distribution<double> le(-3.0, 0.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    constexpr int nbins = 12;
    DecayEstimate out;
    out.seed = seed;
    out.samples = samples;
    out.bins.resize(nbins);
    std::vector<std::pair<double, double>> obs;
    for (std::size_t i = 0; i < samples; ++i) {
        auto c = detail::random_point(s, rng);
        double r = std::exp(lr(rng));
        double t = le(rng);
        double eps = r * std::pow(10.0, t);
        std::vector<double> u(s.n);
        double norm = 0;
        for (auto& v : u) {
            v = gauss(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : u) v /= norm;
        // the hyperplane passes through a point of K inside the ball
        std::vector<double> p = c;
        for (int tries = 0; tries < 8; ++tries) {
            auto q = detail::random_point(s, rng);
            bool in = true;
            for (int j = 0; j < s.n; ++j) in = in && std::abs(q[j] - c[j]) <= r;
            if (in) {
                p = q;
                break;
            }
        }
        double a = 0;
        for (int j = 0; j < s.n; ++j) a += u[j] * p[j];
        double mu = detail::box_measure_approx(s, c, r);
        if (mu <= 0) continue;
        double frac = std::min(1.0, detail::slab_measure_approx(s, c, r, u, a, eps) / mu);
        int bin = std::min(nbins - 1, static_cast<int>((t + 3.0) / 3.0 * nbins));
        auto& b = out.bins[bin];
        b.log_ratio += t;
        ++b.count;
        b.max_fraction = std::max(b.max_fraction, frac);
        obs.emplace_back(t, frac);
    }
    std::vector<double> xs, ys;
    for (auto& b : out.bins) {
        if (b.count == 0) continue;
        b.log_ratio /= static_cast<double>(b.count);
        if (b.max_fraction <= 0) continue;
        xs.push_back(b.log_ratio);
        ys.push_back(std::log10(b.max_fraction));
    }
    double intercept = 0, err = 0;
    if (xs.size() >= 2) detail::least_squares(xs, ys, out.alpha_hat, intercept, err);
    for (auto [t, f] : obs) out.C_hat = std::max(out.C_hat, f / std::pow(10.0, out.alpha_hat * t));
    return out;
}

} // namespace badapprox
