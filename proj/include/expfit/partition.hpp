#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "expfit/subspace.hpp"

namespace expfit {

/// Dyadic box partition of the frequency domain (-inf, 0] x [-pi, pi)i.
/// Stack l (1-based) spans the real interval (alphas[l-2], alphas[l-1]] --
/// with the operational cap standing in for alpha_0 = -inf -- and divides
/// the imaginary axis into 2^l equal boxes.  Box corners serve as
/// interpolation points guaranteeing the target efficiency for any
/// frequency inside the box.
struct BoxPartition {
    double target_eff = 0.95;
    double eta_grid = 0.99999;
    bool n_inf = true;   // ladder built at the n = infinity surrogate
    Index n_built = 0;   // surrogate length used for the build
    std::vector<double> alphas;  // strictly increasing, last entry exactly 0

    static constexpr double cap = -30.0;  // operational alpha_0

    Index stacks() const { return static_cast<Index>(alphas.size()); }
    double box_height(Index ell) const { return 2.0 * pi / double(Index(1) << ell); }
};

/// Auxiliary grid of single-exponential Jacobian subspaces: reals a_j with
/// imaginary spacings b_j chosen so consecutive Jacobians have efficiency
/// eta_grid; grid points are z_{j,k} = a_j + i k b_j.
struct AuxGrid {
    std::vector<double> reals;     // ascending
    std::vector<double> spacings;  // b_j > 0, b_0 = b_1
    double grid_eff = 0.0;
};

namespace detail {

// Self-Gram of [V'(z), V(z)]; depends on z only through 2 Re z.
inline Eigen::Matrix2d single_jacobian_gram(double two_re, Index n) {
    const Complex d(two_re, 0.0);
    Eigen::Matrix2d g;
    g(0, 0) = generalized_geometric_sum(2, 0, n, d).real();
    g(0, 1) = geometric_sum_derivative(d, n).real();
    g(1, 0) = g(0, 1);
    g(1, 1) = geometric_sum(d, n).real();
    return g;
}

// Orthogonalizer factor of a small real SPD Gram.  The Gram is column
// equilibrated before the relative eigenvalue cut: V and V' columns can
// differ in norm by many orders of magnitude (deep damping) without the
// spanned subspace being anywhere near degenerate.  Empty when the Gram is
// genuinely degenerate or has overflowed; callers treat that as zero
// efficiency.
inline Eigen::MatrixXd small_gram_orth(const Eigen::Matrix2d& g) {
    if (!g.allFinite()) return Eigen::MatrixXd(2, 0);
    if (!(g(0, 0) > 0.0 && g(1, 1) > 0.0)) return Eigen::MatrixXd(2, 0);
    const Eigen::Vector2d s(1.0 / std::sqrt(g(0, 0)), 1.0 / std::sqrt(g(1, 1)));
    const Eigen::Matrix2d gn = s.asDiagonal() * g * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(gn);
    const double lmax = es.eigenvalues()(1);
    if (!(lmax > 0.0)) return Eigen::MatrixXd(2, 0);
    Index keep = 0;
    for (Index i = 0; i < 2; ++i)
        if (es.eigenvalues()(i) > 1e-14 * lmax) ++keep;
    Eigen::MatrixXd orth(2, keep);
    for (Index i = 0; i < keep; ++i) {
        const Index src = 2 - keep + i;
        orth.col(i) = s.asDiagonal() * es.eigenvectors().col(src) /
                      std::sqrt(es.eigenvalues()(src));
    }
    return orth;
}

// product of all squared singular values of a tall matrix
inline double sigma_sq_product(const CMat& m) {
    const CMat g = m.adjoint() * m;
    const Complex det = Eigen::PartialPivLU<CMat>(g).determinant();
    return std::isfinite(det.real()) ? std::max(det.real(), 0.0) : 0.0;
}

// eta between the Jacobian subspaces of two single exponentials, computed
// through closed-form Grams; cost independent of n.
inline double single_pair_efficiency(Complex w1, Complex w2, Index n) {
    const Eigen::MatrixXd o1 = small_gram_orth(
        single_jacobian_gram(2.0 * w1.real(), n));
    const Eigen::MatrixXd o2 = small_gram_orth(
        single_jacobian_gram(2.0 * w2.real(), n));
    if (o1.cols() < 2 || o2.cols() < 2) return 0.0;
    const Complex d = std::conj(w1) + w2;
    Eigen::Matrix2cd cross;
    cross(0, 0) = generalized_geometric_sum(2, 0, n, d);  // V'(w1)* V'(w2)
    cross(0, 1) = geometric_sum_derivative(d, n);         // V'(w1)* V(w2)
    cross(1, 0) = cross(0, 1);                            // V(w1)* V'(w2)
    cross(1, 1) = geometric_sum(d, n);
    if (!cross.allFinite()) return 0.0;
    const CMat m = o1.transpose() * cross * o2;
    return std::min(sigma_sq_product(m), 1.0);
}

}  // namespace detail

/// Build the auxiliary grid over [lo, hi]: starting from a_0 = lo, each step
/// solves eta(J(a_j), J(a_j + (1+i)c)) = eta_grid for c by bisection
/// (tolerance 1e-6 in eta) and advances a_{j+1} = a_j + c, b_{j+1} = c.
inline AuxGrid build_aux_grid(double eta_grid, double lo, double hi, Index n) {
    if (!(eta_grid > 0.9 && eta_grid < 1.0))
        throw std::invalid_argument("build_aux_grid: eta_grid must be in (0.9, 1)");
    if (!(lo <= hi))
        throw std::invalid_argument("build_aux_grid: empty range");
    AuxGrid grid;
    grid.grid_eff = eta_grid;
    double a = lo;
    double guess = std::max(1e-4 * std::abs(lo), 1e-9);
    grid.reals.push_back(a);
    grid.spacings.push_back(0.0);  // b_0 patched to b_1 below
    while (a < hi) {
        // bracket: eta decreases from 1 as c grows
        double c_lo = 0.0, c_hi = guess;
        double eta_hi = detail::single_pair_efficiency(
            a, Complex(a + c_hi, c_hi), n);
        int grow = 0;
        while (eta_hi > eta_grid) {
            c_lo = c_hi;
            c_hi *= 2.0;
            eta_hi = detail::single_pair_efficiency(a, Complex(a + c_hi, c_hi), n);
            if (++grow > 200)
                throw FitError("build_aux_grid: failed to bracket the grid step");
        }
        for (int it = 0; it < 200; ++it) {
            const double c = 0.5 * (c_lo + c_hi);
            const double eta =
                detail::single_pair_efficiency(a, Complex(a + c, c), n);
            if (std::abs(eta - eta_grid) <= 1e-6) {
                c_lo = c_hi = c;
                break;
            }
            (eta > eta_grid ? c_lo : c_hi) = c;
        }
        const double c = 0.5 * (c_lo + c_hi);
        a += c;
        grid.reals.push_back(a);
        grid.spacings.push_back(c);
        guess = c;
        if (grid.reals.size() > 2000000)
            throw FitError("build_aux_grid: grid too fine for range");
    }
    if (grid.spacings.size() > 1) grid.spacings[0] = grid.spacings[1];
    return grid;
}

namespace detail {

// Verification that the box (a_prev, a_cand] x [0, 2 pi / 2^ell] built on its
// four corners reaches eta_grid * eta(W, J(z)) >= target at every grid point
// z inside.
class StackVerifier {
public:
    StackVerifier(const AuxGrid& grid, Index n, double target, double eta_grid)
        : grid_(grid),
          n_(n),
          threshold_(target / eta_grid),
          jfac_(grid.reals.size()) {}

    bool feasible(Index prev_j, Index cand_j, Index ell) {
        const double h = 2.0 * pi / double(Index(1) << ell);
        const double a_prev = grid_.reals[static_cast<std::size_t>(prev_j)];
        const double a_cand = grid_.reals[static_cast<std::size_t>(cand_j)];
        CVec mu(4);
        mu[0] = Complex(a_prev, 0.0);
        mu[1] = Complex(a_prev, h);
        mu[2] = Complex(a_cand, 0.0);
        mu[3] = Complex(a_cand, h);
        CMat gww = gram_vv(mu, mu, n_);
        gww = 0.5 * (gww + gww.adjoint()).eval();
        const CMat worth = gram_orthogonalizer(gww);
        if (worth.cols() < 2) return false;
        const CMat wadj = worth.adjoint();

        // scan from the right edge: over-wide candidates fail fastest there
        for (Index j = cand_j; j >= prev_j; --j) {
            const double aj = grid_.reals[static_cast<std::size_t>(j)];
            const double bj = grid_.spacings[static_cast<std::size_t>(j)];
            const Eigen::MatrixXd& jorth = jfactor(j);
            if (jorth.cols() < 2) return false;
            const Index kmax = static_cast<Index>(std::floor(h / bj + 1e-9));
            for (Index k = 0; k <= kmax; ++k) {
                const Complex z(aj, k * bj);
                Eigen::Matrix<Complex, 4, 2> cross;
                for (Index c = 0; c < 4; ++c) {
                    const Complex d = std::conj(mu[c]) + z;
                    cross(c, 0) = geometric_sum_derivative(d, n_);
                    cross(c, 1) = geometric_sum(d, n_);
                }
                const CMat m = wadj * (cross * jorth);
                if (std::min(sigma_sq_product(m), 1.0) < threshold_)
                    return false;
            }
        }
        return true;
    }

private:
    const Eigen::MatrixXd& jfactor(Index j) {
        auto& slot = jfac_[static_cast<std::size_t>(j)];
        if (!slot)
            slot = small_gram_orth(single_jacobian_gram(
                2.0 * grid_.reals[static_cast<std::size_t>(j)], n_));
        return *slot;
    }

    const AuxGrid& grid_;
    Index n_;
    double threshold_;
    std::vector<std::optional<Eigen::MatrixXd>> jfac_;
};

}  // namespace detail

/// Solve the ladder design problem: for each stack l starting from the
/// operational cap, pick alpha_l as the largest grid real such that every
/// grid point inside the candidate box passes the discounted efficiency
/// check.  The first alpha that would cross zero is clamped to zero.  Pass
/// n = 0 for the n = infinity surrogate (built at n = 2^24).
inline BoxPartition build_partition(double target_eff, double eta_grid, Index n,
                                    int max_stacks = 32) {
    if (!(target_eff < eta_grid && eta_grid < 1.0))
        throw std::invalid_argument(
            "build_partition: need target_eff < eta_grid < 1");
    BoxPartition part;
    part.target_eff = target_eff;
    part.eta_grid = eta_grid;
    part.n_inf = (n == 0);
    const Index n_eff = part.n_inf ? (Index(1) << 24) : n;
    part.n_built = n_eff;

    const double stop = -1.0 / (256.0 * static_cast<double>(n_eff));
    const AuxGrid grid =
        build_aux_grid(eta_grid, BoxPartition::cap, stop, n_eff);
    detail::StackVerifier verifier(grid, n_eff, target_eff, eta_grid);

    const Index top = static_cast<Index>(grid.reals.size()) - 1;
    Index prev_j = 0;
    for (int ell = 1; ell <= max_stacks; ++ell) {
        if (prev_j >= top) break;
        if (!verifier.feasible(prev_j, prev_j + 1, ell))
            throw FitError("build_partition: no feasible box width at stack " +
                           std::to_string(ell));
        if (verifier.feasible(prev_j, top, ell)) {
            // design would cross zero: clamp this stack's right edge to 0
            part.alphas.push_back(0.0);
            return part;
        }
        Index lo = prev_j + 1, hi = top;
        while (hi - lo > 1) {
            const Index mid = lo + (hi - lo) / 2;
            (verifier.feasible(prev_j, mid, ell) ? lo : hi) = mid;
        }
        part.alphas.push_back(grid.reals[static_cast<std::size_t>(lo)]);
        // finite-n stop once boxes are narrower than the sample resolution
        if (!part.n_inf && lo > prev_j &&
            grid.reals[static_cast<std::size_t>(lo)] -
                    grid.reals[static_cast<std::size_t>(prev_j)] <
                1.0 / static_cast<double>(n_eff))
            break;
        prev_j = lo;
    }
    part.alphas.push_back(0.0);
    return part;
}

namespace detail {

// Ladder reals of the 95% / eta_grid = 0.99999 partition built once at the
// n = infinity surrogate (regenerate with `expfit build-partition --n inf`).
inline constexpr double kInfLadder[] = {
    -1.41923618015, -0.666647222096, -0.35322669659, -0.181919451948,
    -0.092109331942, -0.0461847451294, -0.0231179855186, -0.0115718302205,
};
// deeper rungs follow alpha_l ~ kTailBase * 2^-l; this constant is slightly
// deeper than the builder's own converged tail, so extension is conservative
inline constexpr double kTailBase = -2.9720;

}  // namespace detail

/// Stored n = infinity ladder extended by the dyadic tail rule until the box
/// width drops below 1/n, then truncated at zero.
inline BoxPartition default_partition(Index n) {
    if (n < 16) throw std::invalid_argument("default_partition: need n >= 16");
    BoxPartition part;
    part.n_inf = true;
    part.n_built = Index(1) << 24;
    const double width_floor = 1.0 / static_cast<double>(n);
    constexpr int stored =
        static_cast<int>(sizeof(detail::kInfLadder) / sizeof(double));
    double prev = BoxPartition::cap;
    for (int ell = 1;; ++ell) {
        const double alpha = (ell <= stored)
                                 ? detail::kInfLadder[ell - 1]
                                 : detail::kTailBase * std::pow(2.0, -ell);
        if (alpha - prev < width_floor) break;
        part.alphas.push_back(alpha);
        prev = alpha;
    }
    part.alphas.push_back(0.0);
    return part;
}

namespace detail {

inline bool is_pow2(Index n) { return n > 0 && (n & (n - 1)) == 0; }

// top edge of the highest box reduces to -pi
inline double reduce_corner_imag(double y) {
    return (y >= pi) ? y - 2.0 * pi : y;
}

}  // namespace detail

/// Interpolation points for a set of frequencies: the four corners of each
/// frequency's box, deduplicated and sorted.  In the rightmost stack of a
/// non-power-of-two n, the right corners are replaced by the two closest
/// n-th roots of unity and the left corners by the two closest points on the
/// leftward stack's edge.
inline CVec select_interpolation_points(const CVec& omega,
                                        const BoxPartition& part, Index n) {
    if (part.alphas.empty() || part.alphas.back() != 0.0)
        throw std::invalid_argument("select_interpolation_points: bad ladder");
    std::vector<std::pair<double, double>> pts;
    const Index nstacks = part.stacks();

    for (Index i = 0; i < omega.size(); ++i) {
        const double re = std::min(omega[i].real(), 0.0);
        const double im = reduce_imag(omega[i].imag());

        // stack s (0-based): interval (alphas[s-1], alphas[s]]
        Index s = 0;
        while (s + 1 < nstacks && re > part.alphas[static_cast<std::size_t>(s)])
            ++s;
        const Index ell = s + 1;
        const double left =
            (s == 0) ? BoxPartition::cap : part.alphas[static_cast<std::size_t>(s - 1)];
        const double right = part.alphas[static_cast<std::size_t>(s)];

        if (right == 0.0 && !detail::is_pow2(n)) {
            // leftward stack edge points
            const double hl = (nstacks >= 2) ? part.box_height(ell - 1)
                                             : part.box_height(ell);
            const double bl = std::floor((im + pi) / hl);
            pts.emplace_back(left, detail::reduce_corner_imag(-pi + bl * hl));
            pts.emplace_back(left, detail::reduce_corner_imag(-pi + (bl + 1) * hl));
            // two closest n-th roots of unity exponents
            const double hn = 2.0 * pi / static_cast<double>(n);
            const double kn = std::floor((im + pi) / hn);
            pts.emplace_back(0.0, detail::reduce_corner_imag(-pi + kn * hn));
            pts.emplace_back(0.0, detail::reduce_corner_imag(-pi + (kn + 1) * hn));
            continue;
        }

        const double h = part.box_height(ell);
        const double b = std::floor((im + pi) / h);
        const double bottom = -pi + b * h;
        const double top = detail::reduce_corner_imag(bottom + h);
        pts.emplace_back(left, bottom);
        pts.emplace_back(left, top);
        pts.emplace_back(right, bottom);
        pts.emplace_back(right, top);
    }

    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    CVec out(static_cast<Index>(pts.size()));
    for (std::size_t k = 0; k < pts.size(); ++k)
        out[static_cast<Index>(k)] = Complex(pts[k].first, pts[k].second);
    return out;
}

/// Partition file format: key-value text with fields target_eff, eta_grid,
/// n ("inf" allowed), alphas (>= 10 significant digits).
inline void save_partition(std::ostream& os, const BoxPartition& part) {
    os.precision(12);
    os << "target_eff " << part.target_eff << "\n";
    os << "eta_grid " << part.eta_grid << "\n";
    os << "n ";
    if (part.n_inf)
        os << "inf";
    else
        os << part.n_built;
    os << "\n";
    os << "alphas";
    for (double a : part.alphas) os << ' ' << a;
    os << "\n";
}

inline void save_partition(const std::string& path, const BoxPartition& part) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_partition: cannot open " + path);
    save_partition(os, part);
}

inline BoxPartition load_partition(std::istream& is) {
    BoxPartition part;
    part.alphas.clear();
    std::string line;
    bool have_alphas = false;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key.empty() || key[0] == '#') continue;
        if (key == "target_eff")
            ls >> part.target_eff;
        else if (key == "eta_grid")
            ls >> part.eta_grid;
        else if (key == "n") {
            std::string v;
            ls >> v;
            part.n_inf = (v == "inf");
            part.n_built = part.n_inf ? (Index(1) << 24) : std::stoll(v);
        } else if (key == "alphas") {
            double a;
            while (ls >> a) part.alphas.push_back(a);
            have_alphas = true;
        }
    }
    if (!have_alphas || part.alphas.empty() || part.alphas.back() != 0.0)
        throw std::runtime_error("load_partition: missing or invalid alphas");
    for (std::size_t k = 1; k < part.alphas.size(); ++k)
        if (part.alphas[k] <= part.alphas[k - 1])
            throw std::runtime_error("load_partition: alphas not increasing");
    return part;
}

inline BoxPartition load_partition(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_partition: cannot open " + path);
    return load_partition(is);
}

}  // namespace expfit
