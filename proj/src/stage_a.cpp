#include "rlus/stage_a.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "rlus/collapse.hpp"
#include "rlus/gwalign.hpp"
#include "rlus/linalg.hpp"

namespace rlus {

CandidateMode candidate_mode_from_string(std::string_view s) {
    if (s == "rank" || s == "rank-matched") return CandidateMode::RankMatched;
    if (s == "cross" || s == "cross-product") return CandidateMode::CrossProduct;
    throw std::invalid_argument("unknown candidate mode: " + std::string(s));
}

LsqMethod lsq_method_from_string(std::string_view s) {
    if (s == "recompute") return LsqMethod::Recompute;
    if (s == "incremental") return LsqMethod::Incremental;
    throw std::invalid_argument("unknown least-squares method: " + std::string(s));
}

ResidualKind residual_kind_from_string(std::string_view s) {
    if (s == "plain") return ResidualKind::Plain;
    if (s == "sorted" || s == "block-sorted") return ResidualKind::BlockSorted;
    throw std::invalid_argument("unknown residual kind: " + std::string(s));
}

double forward_residual(const Vector& y, const Vector& y_hat, Index r, ResidualKind kind) {
    if (y.size() != y_hat.size()) throw std::invalid_argument("forward_residual: size mismatch");
    if (kind == ResidualKind::Plain) return (y - y_hat).norm();
    if (r < 1 || y.size() % r != 0) throw std::invalid_argument("forward_residual: r must divide n");
    std::vector<double> a(static_cast<std::size_t>(r)), b(static_cast<std::size_t>(r));
    double total = 0.0;
    for (Index k = 0; k < y.size() / r; ++k) {
        for (Index i = 0; i < r; ++i) {
            a[static_cast<std::size_t>(i)] = y(k * r + i);
            b[static_cast<std::size_t>(i)] = y_hat(k * r + i);
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return std::sqrt(total);
}

double qap1d_objective(const Vector& a, const Vector& b, const Permutation& s) {
    if (a.size() != b.size() || s.size() != a.size())
        throw std::invalid_argument("qap1d_objective: size mismatch");
    double total = 0.0;
    for (Index p = 0; p < a.size(); ++p)
        for (Index q = 0; q < a.size(); ++q) {
            const double da = a(p) - a(q);
            const double db = b(s[p]) - b(s[q]);
            total -= da * da * db * db;
        }
    return total;
}

SortedAlignment sorted_alignment(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("sorted_alignment: size mismatch");
    const Index n = a.size();
    auto order = [n](const Vector& v) {
        std::vector<Index> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), Index{0});
        std::stable_sort(idx.begin(), idx.end(), [&](Index i, Index j) { return v(i) < v(j); });
        return idx;
    };
    const auto oa = order(a), ob = order(b);
    std::vector<Index> up(static_cast<std::size_t>(n)), down(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        up[static_cast<std::size_t>(oa[static_cast<std::size_t>(i)])] = ob[static_cast<std::size_t>(i)];
        down[static_cast<std::size_t>(oa[static_cast<std::size_t>(i)])] =
            ob[static_cast<std::size_t>(n - 1 - i)];
    }
    SortedAlignment asc{Permutation(std::move(up)), 0.0, false};
    SortedAlignment desc{Permutation(std::move(down)), 0.0, true};
    asc.objective = qap1d_objective(a, b, asc.assignment);
    desc.objective = qap1d_objective(a, b, desc.assignment);
    return desc.objective < asc.objective ? desc : asc;
}

AugmentedSystem::AugmentedSystem(const Matrix& B, const Vector& y, Index r) : r_(r) {
    if (B.rows() != y.size())
        throw std::invalid_argument("AugmentedSystem: B and y have different row counts");
    b_aug_ = block_sums(B, r);
    y_aug_ = block_sums(Matrix(y), r).col(0);
    const auto n = static_cast<std::size_t>(B.rows());
    const auto blocks = static_cast<std::size_t>(B.rows() / r);
    p_free_.assign(n, 1);
    q_free_.assign(n, 1);
    active_.assign(blocks, r >= 2 ? 1 : 0);
    block_free_.assign(blocks, r);
    free_count_ = B.rows();
}

std::vector<Index> AugmentedSystem::active_blocks() const {
    std::vector<Index> out;
    for (Index k = 0; k < num_blocks(); ++k)
        if (block_active(k)) out.push_back(k);
    return out;
}

void AugmentedSystem::append(const Matrix& B, const Vector& y, Index p, Index q) {
    if (p < 0 || p >= n() || q < 0 || q >= n() || !p_free_[static_cast<std::size_t>(p)] ||
        !q_free_[static_cast<std::size_t>(q)])
        throw std::invalid_argument("AugmentedSystem::append: index not feasible");
    const Index k = p / r_;
    if (q / r_ != k || !block_active(k))
        throw std::invalid_argument("AugmentedSystem::append: pair must lie in one active block");

    b_aug_.conservativeResize(b_aug_.rows() + 1, Eigen::NoChange);
    b_aug_.row(b_aug_.rows() - 1) = B.row(p);
    y_aug_.conservativeResize(y_aug_.size() + 1);
    y_aug_(y_aug_.size() - 1) = y(q);

    p_free_[static_cast<std::size_t>(p)] = 0;
    q_free_[static_cast<std::size_t>(q)] = 0;
    --free_count_;
    auto& left = block_free_[static_cast<std::size_t>(k)];
    --left;
    if (left < 2) active_[static_cast<std::size_t>(k)] = 0;
    matched_.push_back({p, q});
}

Index AugmentedSystem::available_augmentations() const {
    Index total = 0;
    for (Index k = 0; k < num_blocks(); ++k)
        if (block_active(k)) total += block_free_[static_cast<std::size_t>(k)] - 1;
    return total;
}

std::vector<Index> block_sort_indices(const Vector& v, std::span<const char> feasible, Index r,
                                      Index k) {
    if (r < 1 || k < 0 || (k + 1) * r > v.size())
        throw std::invalid_argument("block_sort_indices: block out of range");
    std::vector<Index> idx;
    for (Index i = k * r; i < (k + 1) * r; ++i)
        if (feasible[static_cast<std::size_t>(i)]) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return v(a) < v(b); });
    return idx;
}

std::vector<MatchedPair> candidate_pairs(std::span<const Index> ps, std::span<const Index> qs,
                                         CandidateMode mode) {
    std::vector<MatchedPair> out;
    if (mode == CandidateMode::RankMatched) {
        if (ps.size() != qs.size())
            throw std::logic_error("candidate_pairs: feasible row and measurement sets diverged");
        for (std::size_t i = 0; i < ps.size(); ++i) out.push_back({ps[i], qs[i]});
    } else {
        for (Index p : ps)
            for (Index q : qs) out.push_back({p, q});
    }
    return out;
}

ForwardError forward_error(const Matrix& B, const Vector& y, const AugmentedSystem& aug, Index p,
                           Index q, ResidualKind kind) {
    if (p < 0 || p >= aug.n() || q < 0 || q >= aug.n() || !aug.p_feasible()[static_cast<std::size_t>(p)] ||
        !aug.q_feasible()[static_cast<std::size_t>(q)] || p / aug.r() != q / aug.r())
        throw std::invalid_argument("forward_error: (p, q) must be feasible and share a block");
    const Index rows = aug.B_aug().rows();
    Matrix a(rows + 1, B.cols());
    a.topRows(rows) = aug.B_aug();
    a.row(rows) = B.row(p);
    Vector rhs(rows + 1);
    rhs.head(rows) = aug.y_aug();
    rhs(rows) = y(q);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    cod.setThreshold(std::numeric_limits<double>::epsilon() *
                     static_cast<double>(std::max(a.rows(), a.cols())));
    ForwardError fe;
    fe.x = cod.solve(rhs);
    fe.error = forward_residual(y, B * fe.x, aug.r(), kind);
    return fe;
}

nlohmann::json to_json(const StageATraceEntry& e) {
    return {{"t", e.t}, {"k", e.block}, {"p", e.p}, {"q", e.q}, {"forward_error", e.error}};
}

namespace {

// Squared BlockSorted residual of `fit` against y whose blocks are already
// sorted ascending. `buf` holds r scratch values.
double sorted_residual_sq(const Vector& y_sorted, const Vector& fit, Index r,
                          std::vector<double>& buf) {
    buf.resize(static_cast<std::size_t>(r));
    double total = 0.0;
    for (Index start = 0; start < fit.size(); start += r) {
        for (Index i = 0; i < r; ++i) buf[static_cast<std::size_t>(i)] = fit(start + i);
        std::sort(buf.begin(), buf.end());
        for (Index i = 0; i < r; ++i) {
            const double diff = y_sorted(start + i) - buf[static_cast<std::size_t>(i)];
            total += diff * diff;
        }
    }
    return total;
}

Matrix sort_blocks(Matrix Y, Index r) {
    for (Index j = 0; j < Y.cols(); ++j)
        for (Index start = 0; start < Y.rows(); start += r) {
            auto seg = Y.col(j).segment(start, r);
            std::sort(seg.begin(), seg.end());
        }
    return Y;
}

// Sum over views of the squared forward residual.
double residual_sq(const Matrix& Y, const Matrix& Y_hat, Index r, ResidualKind kind) {
    double total = 0.0;
    for (Index j = 0; j < Y.cols(); ++j) {
        const double e = forward_residual(Y.col(j), Y_hat.col(j), r, kind);
        total += e * e;
    }
    return total;
}

double dense_error(const Matrix& B, const Matrix& Y, const Matrix& B_aug, const Matrix& Y_aug,
                   Index r, Index p, Index q, ResidualKind kind) {
    const Index rows = B_aug.rows();
    Matrix a(rows + 1, B.cols());
    a.topRows(rows) = B_aug;
    a.row(rows) = B.row(p);
    Matrix rhs(rows + 1, Y.cols());
    rhs.topRows(rows) = Y_aug;
    rhs.row(rows) = Y.row(q);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    cod.setThreshold(std::numeric_limits<double>::epsilon() *
                     static_cast<double>(std::max(a.rows(), a.cols())));
    const Matrix x = cod.solve(rhs);
    return std::sqrt(residual_sq(Y, B * x, r, kind));
}

// Greville update. For b_p outside the row space of A the min-norm solution
// of [A; b_p] X = [Y_aug; v] is X0 + w alpha, w the null-space component of
// b_p and alpha = (v - b_p X0) / (b_p . w). Inside the row space it is the
// recursive least-squares step X0 + k (v - b_p X0) / (1 + b_p . k) with
// k = (A^T A)^+ b_p. Either way the fitted values move along g = B w (or B k).
class IncrementalEvaluator {
public:
    IncrementalEvaluator(const Matrix& B, const Matrix& Y, const Matrix& B_aug,
                         const Matrix& Y_aug, Index r, ResidualKind kind)
        : B_(B), Y_(Y), r_(r), kind_(kind), pinv_(B_aug),
          cache_(static_cast<std::size_t>(B.rows())) {
        X0_.resize(B.cols(), Y.cols());
        for (Index j = 0; j < Y.cols(); ++j) X0_.col(j) = pinv_.solve(Y_aug.col(j));
        fit0_ = B * X0_;
        R0_ = Y - fit0_;
        r0_sq_ = R0_.squaredNorm();
        if (kind_ == ResidualKind::BlockSorted) y_sorted_ = sort_blocks(Y, r);
    }

    double error(Index p, Index q) {
        const Entry& e = entry(p);
        const Eigen::RowVectorXd alpha = (Y_.row(q) - e.bx0) / e.beta;
        if (kind_ == ResidualKind::Plain) {
            const double sq =
                r0_sq_ - 2.0 * alpha.dot(e.r0_g) + e.g.squaredNorm() * alpha.squaredNorm();
            // Near-exact fits cancel to sqrt(eps) accuracy; form the residual then.
            if (sq < 1e-8 * r0_sq_) return (R0_ - e.g * alpha).norm();
            return std::sqrt(sq);
        }
        double total = 0.0;
        for (Index j = 0; j < Y_.cols(); ++j) {
            fit_ = fit0_.col(j) + alpha(j) * e.g;
            total += sorted_residual_sq(y_sorted_.col(j), fit_, r_, buf_);
        }
        return std::sqrt(total);
    }

private:
    struct Entry {
        bool ready = false;
        double beta = 0.0;
        Eigen::RowVectorXd bx0;
        Vector g;
        Eigen::RowVectorXd r0_g;  // g^T R0
    };

    const Entry& entry(Index p) {
        Entry& e = cache_[static_cast<std::size_t>(p)];
        if (e.ready) return e;
        e.ready = true;
        const auto& null = pinv_.null_basis();
        const Vector b = B_.row(p).transpose();
        e.bx0 = b.transpose() * X0_;
        bool independent = false;
        if (null.cols() > 0) {
            const Vector w = null * (null.transpose() * b);
            e.beta = b.dot(w);
            // Below this the new row is numerically in the row space already.
            if (e.beta > 1e-10 * b.squaredNorm()) {
                e.g = B_ * w;
                independent = true;
            }
        }
        if (!independent) {
            const Vector k = pinv_.gram_solve(b);
            e.beta = 1.0 + b.dot(k);
            e.g = B_ * k;
        }
        e.r0_g = e.g.transpose() * R0_;
        return e;
    }

    const Matrix& B_;
    const Matrix& Y_;
    Index r_;
    ResidualKind kind_;
    linalg::PseudoInverse pinv_;
    Matrix X0_;
    Matrix fit0_;
    Matrix R0_;
    double r0_sq_ = 0.0;
    Matrix y_sorted_;
    Vector fit_;
    std::vector<double> buf_;
    std::vector<Entry> cache_;
};

// Rank-matched pairs of block k agreed on by the most views: every view votes
// for its i-th smallest (y_hat, y) pair and the vote matrix is resolved by a
// max-weight assignment. A single view gives its own rank matching.
std::vector<MatchedPair> consensus_pairs(const Matrix& Y_hat, const Matrix& Y,
                                         const AugmentedSystem& aug, Index k) {
    const Index r = aug.r();
    std::vector<Index> ps, qs;
    for (Index i = k * r; i < (k + 1) * r; ++i) {
        if (aug.p_feasible()[static_cast<std::size_t>(i)]) ps.push_back(i);
        if (aug.q_feasible()[static_cast<std::size_t>(i)]) qs.push_back(i);
    }
    if (ps.size() != qs.size())
        throw std::logic_error("candidate_pairs: feasible row and measurement sets diverged");
    if (Y.cols() == 1) {
        return candidate_pairs(block_sort_indices(Y_hat.col(0), aug.p_feasible(), r, k),
                               block_sort_indices(Y.col(0), aug.q_feasible(), r, k),
                               CandidateMode::RankMatched);
    }
    const auto f = static_cast<Index>(ps.size());
    auto local = [&](const std::vector<Index>& set, Index global) {
        return static_cast<Index>(std::lower_bound(set.begin(), set.end(), global) - set.begin());
    };
    Matrix votes = Matrix::Zero(f, f);
    for (Index j = 0; j < Y.cols(); ++j) {
        const auto sp = block_sort_indices(Y_hat.col(j), aug.p_feasible(), r, k);
        const auto sq = block_sort_indices(Y.col(j), aug.q_feasible(), r, k);
        for (std::size_t i = 0; i < sp.size(); ++i) votes(local(ps, sp[i]), local(qs, sq[i])) += 1.0;
    }
    const auto assign = linear_assignment(-votes);
    std::vector<MatchedPair> out;
    for (Index i = 0; i < f; ++i)
        out.push_back({ps[static_cast<std::size_t>(i)], qs[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])]});
    return out;
}

struct Choice {
    double error = std::numeric_limits<double>::infinity();
    Index block = -1;
    Index p = -1;
    Index q = -1;

    bool worse_than(double e, Index k, Index pp, Index qq) const {
        return std::tie(e, k, pp, qq) < std::tie(error, block, p, q);
    }
};

}  // namespace

StageAJointResult run_stage_a_joint(const Matrix& B, const Matrix& Y, Index r,
                                    const StageAConfig& cfg) {
    if (r < 1 || B.rows() % r != 0) throw std::invalid_argument("run_stage_a: r must divide n");
    if (B.rows() != Y.rows()) throw std::invalid_argument("run_stage_a: B and y row mismatch");
    if (Y.cols() < 1) throw std::invalid_argument("run_stage_a: need at least one view");
    if (!B.allFinite() || !Y.allFinite())
        throw std::invalid_argument("run_stage_a: non-finite input");

    const Index n = B.rows();
    const Index d = B.cols();
    const Index collapsed_rows = n / r;
    if (!(cfg.row_factor > 0.0)) throw std::invalid_argument("run_stage_a: row_factor must be > 0");
    Index requested = 0;
    if (cfg.max_augmentations) {
        requested = *cfg.max_augmentations;
        if (requested < 0 || requested > n - collapsed_rows)
            throw std::invalid_argument("run_stage_a: max_augmentations must lie in [0, n - n/r]");
    } else {
        const auto target = static_cast<Index>(std::ceil(cfg.row_factor * static_cast<double>(d) - 1e-9));
        requested = std::clamp<Index>(target - collapsed_rows, 0, n - collapsed_rows);
    }

    // The augmented system tracks feasibility; the right-hand sides of all
    // views are carried alongside.
    AugmentedSystem aug(B, Y.col(0), r);
    Matrix y_aug = block_sums(Y, r);
    const Index iterations = std::min(requested, aug.available_augmentations());

    StageAJointResult res;
    res.X_hat = linalg::pinv_solve(aug.B_aug(), y_aug);
    res.Y_hat = B * res.X_hat;

    std::vector<MatchedPair> cands;
    for (Index t = 0; t < iterations; ++t) {
        std::optional<IncrementalEvaluator> inc;
        if (cfg.lsq == LsqMethod::Incremental)
            inc.emplace(B, Y, aug.B_aug(), y_aug, r, cfg.residual);

        Choice best;
        for (Index k : aug.active_blocks()) {
            cands.clear();
            if (cfg.candidate_mode == CandidateMode::CrossProduct) {
                const auto ps = block_sort_indices(res.Y_hat.col(0), aug.p_feasible(), r, k);
                const auto qs = block_sort_indices(Y.col(0), aug.q_feasible(), r, k);
                cands = candidate_pairs(ps, qs, CandidateMode::CrossProduct);
            } else {
                cands = consensus_pairs(res.Y_hat, Y, aug, k);
            }
            for (const auto& [p, q] : cands) {
                const double e = inc ? inc->error(p, q)
                                     : dense_error(B, Y, aug.B_aug(), y_aug, r, p, q, cfg.residual);
                if (best.worse_than(e, k, p, q)) best = {e, k, p, q};
            }
        }
        if (best.block < 0) break;

        aug.append(B, Y.col(0), best.p, best.q);
        y_aug.conservativeResize(y_aug.rows() + 1, Eigen::NoChange);
        y_aug.row(y_aug.rows() - 1) = Y.row(best.q);
        res.X_hat = linalg::pinv_solve(aug.B_aug(), y_aug);
        res.Y_hat = B * res.X_hat;
        res.trace.push_back({t, best.block, best.p, best.q, best.error});
    }

    res.matched = aug.matched();
    res.B_aug = aug.B_aug();
    return res;
}

StageAResult run_stage_a(const Matrix& B, const Vector& y, Index r, const StageAConfig& cfg) {
    auto joint = run_stage_a_joint(B, Matrix(y), r, cfg);
    StageAResult res;
    res.y_hat = joint.Y_hat.col(0);
    res.x_hat = joint.X_hat.col(0);
    res.matched = std::move(joint.matched);
    res.trace = std::move(joint.trace);
    res.B_aug = std::move(joint.B_aug);
    return res;
}

}  // namespace rlus
