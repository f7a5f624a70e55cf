#include "rlus/gwalign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rlus/parallel.hpp"

namespace rlus {

Coupling::Coupling(Matrix gamma, double tol) : gamma_(std::move(gamma)) {
    if (gamma_.rows() != gamma_.cols()) throw std::invalid_argument("Coupling: matrix must be square");
    if (!gamma_.allFinite() || (gamma_.array() < 0.0).any())
        throw std::invalid_argument("Coupling: entries must be finite and nonnegative");
    if (max_marginal_deviation() > tol)
        throw std::invalid_argument("Coupling: row and column sums must equal 1");
}

Coupling Coupling::uniform(Index s) {
    return Coupling(Matrix::Constant(s, s, 1.0 / static_cast<double>(s)));
}

Coupling Coupling::from_permutation(const Permutation& p) { return Coupling(p.to_dense()); }

double Coupling::max_marginal_deviation() const {
    if (gamma_.size() == 0) return 0.0;
    const double rows = (gamma_.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double cols = (gamma_.colwise().sum().array() - 1.0).abs().maxCoeff();
    return std::max(rows, cols);
}

CostKind cost_kind_from_string(std::string_view s) {
    if (s == "gram") return CostKind::Gram;
    if (s == "sqeuclidean" || s == "squared-euclidean") return CostKind::SquaredEuclidean;
    throw std::invalid_argument("unknown cost kind: " + std::string(s));
}

void GwConfig::validate() const {
    if (!(epsilon > 0.0) || outer_iters < 1 || sinkhorn_iters < 1 || !(tol > 0.0))
        throw std::invalid_argument("GwConfig: all parameters must be positive");
}

Matrix cost_matrix(const Matrix& rows, CostKind kind) {
    Matrix gram = rows * rows.transpose();
    if (kind == CostKind::Gram) return gram;
    const Vector sq = gram.diagonal();
    Matrix dist = (-2.0 * gram).colwise() + sq;
    dist.rowwise() += sq.transpose();
    dist.diagonal().setZero();
    return dist.cwiseMax(0.0);
}

namespace {

void check_pair(const Matrix& c_src, const Matrix& c_tgt, const Matrix& gamma) {
    const Index s = c_src.rows();
    if (c_src.cols() != s || c_tgt.rows() != s || c_tgt.cols() != s || gamma.rows() != s ||
        gamma.cols() != s)
        throw std::invalid_argument("gw_cost: cost matrices and coupling must be s x s");
}

double log_sum_exp(const auto& v) {
    const double hi = v.maxCoeff();
    if (!std::isfinite(hi)) return hi;
    return hi + std::log((v.array() - hi).exp().sum());
}

// Projects exp(log_kernel) onto couplings with uniform 1/s marginals. Returns
// the log of the projected plan.
Matrix sinkhorn_log(const Matrix& log_kernel, Index max_iters) {
    const Index s = log_kernel.rows();
    if (log_kernel.array().isNaN().any())
        throw NumericalFailure("entropic_gw: non-finite kernel; increase epsilon");
    for (Index i = 0; i < s; ++i)
        if (!std::isfinite(log_kernel.row(i).maxCoeff()))
            throw NumericalFailure("entropic_gw: kernel row underflowed; increase epsilon");
    const double log_marginal = -std::log(static_cast<double>(s));
    Vector f = Vector::Zero(s);
    Vector g = Vector::Zero(s);
    for (Index it = 0; it < max_iters; ++it) {
        for (Index i = 0; i < s; ++i)
            f(i) = log_marginal - log_sum_exp(log_kernel.row(i).transpose() + g);
        for (Index j = 0; j < s; ++j)
            g(j) = log_marginal - log_sum_exp(log_kernel.col(j) + f);
        // Columns are exact after the g-update; rows carry the residual.
        double worst = 0.0;
        for (Index i = 0; i < s; ++i) {
            const double row = std::exp(log_sum_exp(log_kernel.row(i).transpose() + g) + f(i));
            worst = std::max(worst, std::abs(row * static_cast<double>(s) - 1.0));
        }
        if (worst < 1e-12) break;
    }
    Matrix log_plan = log_kernel;
    log_plan.colwise() += f;
    log_plan.rowwise() += g.transpose();
    if (log_plan.array().isNaN().any())
        throw NumericalFailure("entropic_gw: Sinkhorn produced NaN values");
    return log_plan;
}

// Altschuler-Weed-Rigollet rounding: the nearest-in-l1 feasible plan to an
// approximately scaled one. Exact marginals, entries stay nonnegative.
Matrix round_to_marginals(Matrix plan) {
    const Index s = plan.rows();
    const double target = 1.0 / static_cast<double>(s);
    const Vector rows = plan.rowwise().sum();
    for (Index i = 0; i < s; ++i)
        if (rows(i) > target) plan.row(i) *= target / rows(i);
    const Vector cols = plan.colwise().sum().transpose();
    for (Index j = 0; j < s; ++j)
        if (cols(j) > target) plan.col(j) *= target / cols(j);
    const Vector row_gap = (Vector::Constant(s, target) - plan.rowwise().sum()).cwiseMax(0.0);
    const Vector col_gap =
        (Vector::Constant(s, target) - plan.colwise().sum().transpose()).cwiseMax(0.0);
    const double mass = row_gap.sum();
    if (mass > 0.0) plan += row_gap * col_gap.transpose() / mass;
    return plan;
}

}  // namespace

double gw_cost(const Matrix& c_src, const Matrix& c_tgt, const Matrix& gamma) {
    check_pair(c_src, c_tgt, gamma);
    const Vector a = gamma.rowwise().sum();
    const Vector b = gamma.colwise().sum().transpose();
    const double src_term = a.dot(c_src.cwiseAbs2() * a);
    const double tgt_term = b.dot(c_tgt.cwiseAbs2() * b);
    const double cross = (c_src * gamma * c_tgt.transpose()).cwiseProduct(gamma).sum();
    return std::max(0.0, src_term + tgt_term - 2.0 * cross);
}

double gw_cost(const Matrix& c_src, const Matrix& c_tgt, const Coupling& gamma) {
    return gw_cost(c_src, c_tgt, gamma.gamma());
}

double gw_cost_direct(const Matrix& c_src, const Matrix& c_tgt, const Matrix& gamma) {
    check_pair(c_src, c_tgt, gamma);
    const Index s = c_src.rows();
    double total = 0.0;
    for (Index i = 0; i < s; ++i)
        for (Index k = 0; k < s; ++k)
            for (Index j = 0; j < s; ++j)
                for (Index l = 0; l < s; ++l) {
                    const double diff = c_src(i, k) - c_tgt(j, l);
                    total += diff * diff * gamma(i, j) * gamma(k, l);
                }
    return total;
}

GwResult entropic_gw_solve(const Matrix& c_src, const Matrix& c_tgt, const GwConfig& cfg) {
    return entropic_gw_solve(c_src, c_tgt, cfg, Coupling::uniform(c_src.rows()));
}

GwResult entropic_gw_solve(const Matrix& c_src, const Matrix& c_tgt, const GwConfig& cfg,
                           const Coupling& init) {
    cfg.validate();
    const Index s = c_src.rows();
    if (s < 1 || c_src.cols() != s || c_tgt.rows() != s || c_tgt.cols() != s)
        throw std::invalid_argument("entropic_gw: cost matrices must both be s x s");
    if (!c_src.allFinite() || !c_tgt.allFinite())
        throw std::invalid_argument("entropic_gw: non-finite cost entries");

    const double sd = static_cast<double>(s);
    const double scale = c_src.cwiseAbs2().mean() + c_tgt.cwiseAbs2().mean() -
                         2.0 * c_src.mean() * c_tgt.mean();
    const double eps = cfg.absolute_epsilon || !(scale > 0.0) ? cfg.epsilon : cfg.epsilon * scale;

    // Probability-marginal parameterization; unit marginals are s times this.
    const Vector marginal = Vector::Constant(s, 1.0 / sd);
    const Vector src_sq = c_src.cwiseAbs2() * marginal;
    const Vector tgt_sq = c_tgt.cwiseAbs2() * marginal;
    Matrix const_cost = src_sq.replicate(1, s);
    const_cost.rowwise() += tgt_sq.transpose();

    if (init.size() != s) throw std::invalid_argument("entropic_gw: initial coupling must be s x s");
    Matrix plan = init.gamma() / sd;
    Matrix log_plan = plan.array().log().matrix();

    GwResult res;
    res.epsilon = eps;
    res.initial_cost = gw_cost(c_src, c_tgt, Matrix(plan * sd));
    res.cost = res.initial_cost;
    Matrix best = plan;

    for (Index it = 0; it < cfg.outer_iters; ++it) {
        const Matrix pseudo = const_cost - 2.0 * c_src * plan * c_tgt.transpose();
        log_plan = sinkhorn_log(log_plan - pseudo / eps, cfg.sinkhorn_iters);
        Matrix next = round_to_marginals(log_plan.array().exp().matrix());
        log_plan = next.array().log().matrix();
        const double change = (next - plan).norm() / plan.norm();
        plan = std::move(next);
        res.iterations = it + 1;

        const double cost = gw_cost(c_src, c_tgt, Matrix(plan * sd));
        if (cost < res.cost) {
            res.cost = cost;
            best = plan;
        }
        if (change < cfg.tol) {
            res.converged = true;
            break;
        }
    }
    res.coupling = Coupling(best * sd);
    return res;
}

Coupling entropic_gw(const Matrix& c_src, const Matrix& c_tgt, const GwConfig& cfg) {
    return entropic_gw_solve(c_src, c_tgt, cfg).coupling;
}

std::vector<Index> linear_assignment(const Matrix& cost) {
    const Index n = cost.rows();
    if (cost.cols() != n) throw std::invalid_argument("linear_assignment: cost must be square");
    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based potentials; column 0 is the virtual source.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<Index> owner(n + 1, 0), way(n + 1, 0);
    for (Index i = 1; i <= n; ++i) {
        owner[0] = i;
        Index j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const Index i0 = owner[j0];
            double delta = inf;
            Index j1 = 0;
            for (Index j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (owner[j0] != 0);
        do {
            const Index j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<Index> result(n);
    for (Index j = 1; j <= n; ++j) result[owner[j] - 1] = j - 1;
    return result;
}

double qap_cost(const Matrix& c_src, const Matrix& c_tgt, const Permutation& p) {
    const Index s = c_src.rows();
    if (c_src.cols() != s || c_tgt.rows() != s || c_tgt.cols() != s || p.size() != s)
        throw std::invalid_argument("qap_cost: size mismatch");
    double total = 0.0;
    for (Index i = 0; i < s; ++i)
        for (Index k = 0; k < s; ++k) {
            const double diff = c_src(i, k) - c_tgt(p[i], p[k]);
            total += diff * diff;
        }
    return total;
}

namespace {

// Terms of qap_cost in rows or columns i and j, the only ones a swap of
// p[i] and p[j] changes.
double swap_terms(const Matrix& a, const Matrix& b, const std::vector<Index>& p, Index i,
                  Index j) {
    auto sq = [&](Index u, Index v) {
        const double diff = a(u, v) - b(p[static_cast<std::size_t>(u)], p[static_cast<std::size_t>(v)]);
        return diff * diff;
    };
    double total = 0.0;
    for (Index k = 0; k < a.rows(); ++k) {
        total += sq(i, k) + sq(j, k);
        if (k != i && k != j) total += sq(k, i) + sq(k, j);
    }
    return total;
}

}  // namespace

Permutation polish_assignment(const Matrix& c_src, const Matrix& c_tgt, Permutation p) {
    const Index s = c_src.rows();
    if (c_src.cols() != s || c_tgt.rows() != s || c_tgt.cols() != s || p.size() != s)
        throw std::invalid_argument("polish_assignment: size mismatch");
    std::vector<Index> map(static_cast<std::size_t>(s));
    for (Index i = 0; i < s; ++i) map[static_cast<std::size_t>(i)] = p[i];
    const double scale = c_src.squaredNorm() + c_tgt.squaredNorm();
    for (bool improved = true; improved;) {
        improved = false;
        for (Index i = 0; i < s; ++i)
            for (Index j = i + 1; j < s; ++j) {
                const double before = swap_terms(c_src, c_tgt, map, i, j);
                std::swap(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(j)]);
                const double after = swap_terms(c_src, c_tgt, map, i, j);
                // Relative margin keeps rounding noise from cycling.
                if (after < before - 1e-12 * scale) {
                    improved = true;
                } else {
                    std::swap(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(j)]);
                }
            }
    }
    return Permutation(std::move(map));
}

Permutation threshold_to_permutation(const Coupling& gamma) {
    return Permutation(linear_assignment(-gamma.gamma()));
}

std::pair<Permutation, double> brute_force_gw(const Matrix& c_src, const Matrix& c_tgt) {
    const Index s = c_src.rows();
    if (c_src.cols() != s || c_tgt.rows() != s || c_tgt.cols() != s)
        throw std::invalid_argument("brute_force_gw: cost matrices must both be s x s");
    if (s > 8) throw std::invalid_argument("brute_force_gw: refusing s > 8");
    std::vector<Index> map(s);
    std::iota(map.begin(), map.end(), Index{0});
    std::vector<Index> best_map = map;
    double best = std::numeric_limits<double>::infinity();
    do {
        double value = 0.0;
        for (Index i = 0; i < s; ++i)
            for (Index j = 0; j < s; ++j) {
                const double diff = c_src(i, j) - c_tgt(map[i], map[j]);
                value += diff * diff;
            }
        if (value < best) {
            best = value;
            best_map = map;
        }
    } while (std::next_permutation(map.begin(), map.end()));
    return {Permutation(std::move(best_map)), best};
}

namespace {

// Source entry i goes to the target entry of the same rank (or the mirrored
// rank when `reversed`).
Permutation rank_match(const Vector& u, const Vector& v, bool reversed) {
    const Index s = u.size();
    std::vector<Index> iu(static_cast<std::size_t>(s)), iv(static_cast<std::size_t>(s));
    std::iota(iu.begin(), iu.end(), Index{0});
    std::iota(iv.begin(), iv.end(), Index{0});
    std::stable_sort(iu.begin(), iu.end(), [&](Index i, Index j) { return u(i) < u(j); });
    std::stable_sort(iv.begin(), iv.end(), [&](Index i, Index j) { return v(i) < v(j); });
    std::vector<Index> map(static_cast<std::size_t>(s));
    for (Index k = 0; k < s; ++k)
        map[static_cast<std::size_t>(iu[k])] = iv[static_cast<std::size_t>(reversed ? s - 1 - k : k)];
    return Permutation(std::move(map));
}

// Matches rows by their relabeling-invariant profile: the diagonal entry and
// the sorted off-diagonal entries. The assignment cost is the squared gap
// between profiles, a per-row lower bound on the QAP cost.
Permutation profile_match(const Matrix& c_src, const Matrix& c_tgt) {
    const Index s = c_src.rows();
    auto profiles = [s](const Matrix& c) {
        Matrix out(s, s);
        for (Index i = 0; i < s; ++i) {
            std::vector<double> off;
            off.reserve(static_cast<std::size_t>(s - 1));
            for (Index j = 0; j < s; ++j)
                if (j != i) off.push_back(c(i, j));
            std::sort(off.begin(), off.end());
            out(i, 0) = c(i, i);
            for (Index j = 1; j < s; ++j) out(i, j) = off[static_cast<std::size_t>(j - 1)];
        }
        return out;
    };
    const Matrix ps = profiles(c_src), pt = profiles(c_tgt);
    Matrix cost(s, s);
    for (Index i = 0; i < s; ++i)
        for (Index j = 0; j < s; ++j) cost(i, j) = (ps.row(i) - pt.row(j)).squaredNorm();
    return Permutation(linear_assignment(cost));
}

// c_ii + c_jj - 2 c_ij: squared distances when c is a Gram matrix. Relabeling
// both indices of c relabels the result the same way.
Matrix induced_distance(const Matrix& c) {
    const Vector d = c.diagonal();
    return (d.replicate(1, c.cols()) + d.transpose().replicate(c.rows(), 1) - 2.0 * c).eval();
}

}  // namespace

GwMatch gw_match(const Matrix& c_src, const Matrix& c_tgt, const GwConfig& cfg) {
    const Index s = c_src.rows();
    std::vector<Coupling> starts{Coupling::uniform(s)};
    if (cfg.sorted_starts && s > 1) {
        const Matrix flat = Matrix::Constant(s, s, 1.0 / static_cast<double>(s));
        const std::pair<Vector, Vector> scores[] = {
            {c_src.rowwise().sum(), c_tgt.rowwise().sum()},
            {c_src.diagonal(), c_tgt.diagonal()}};
        for (const auto& [u, v] : scores)
            for (bool reversed : {false, true}) {
                const Matrix hard = Coupling::from_permutation(rank_match(u, v, reversed)).gamma();
                starts.emplace_back(0.5 * hard + 0.5 * flat);
            }
        for (const auto& p : {profile_match(c_src, c_tgt),
                              profile_match(induced_distance(c_src), induced_distance(c_tgt))})
            starts.emplace_back(0.5 * Coupling::from_permutation(p).gamma() + 0.5 * flat);
    }
    GwMatch best;
    best.cost = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        GwResult gw = entropic_gw_solve(c_src, c_tgt, cfg, start);
        Permutation p = threshold_to_permutation(gw.coupling);
        if (cfg.polish) p = polish_assignment(c_src, c_tgt, std::move(p));
        const double cost = qap_cost(c_src, c_tgt, p);
        if (cost < best.cost) {
            best.assignment = std::move(p);
            best.cost = cost;
            best.gw = std::move(gw);
        }
    }
    return best;
}

StageBResult stage_b_detailed(const Matrix& Y_hat, const Matrix& Y, Index r, const GwConfig& cfg,
                              int threads) {
    if (r < 1 || Y.rows() % r != 0) throw std::invalid_argument("stage_b: r must divide n");
    if (Y_hat.rows() != Y.rows() || Y_hat.cols() != Y.cols())
        throw std::invalid_argument("stage_b: Y_hat and Y must have the same shape");
    const Index blocks = Y.rows() / r;
    std::vector<Permutation> perms(blocks);
    StageBResult res;
    res.block_costs.assign(blocks, 0.0);
    res.block_iterations.assign(blocks, 0);
    parallel_for(blocks, threads, [&](Index k) {
        const Matrix c_hat = cost_matrix(Y_hat.middleRows(k * r, r), cfg.cost_kind);
        const Matrix c_obs = cost_matrix(Y.middleRows(k * r, r), cfg.cost_kind);
        const GwMatch match = gw_match(c_hat, c_obs, cfg);
        // Rows of the coupling index Y_hat, so this is the transpose of pi_k.
        perms[k] = match.assignment.inverse();
        res.block_costs[k] = match.gw.cost;
        res.block_iterations[k] = match.gw.iterations;
    });
    res.pi_hat = RLocalPermutation(r, std::move(perms));
    return res;
}

RLocalPermutation stage_b(const Matrix& Y_hat, const Matrix& Y, Index r, const GwConfig& cfg) {
    return stage_b_detailed(Y_hat, Y, r, cfg).pi_hat;
}

}  // namespace rlus
