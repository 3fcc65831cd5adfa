// SPDX-License-Identifier: Apache-2.0
//
// beamcast — max-min fair hybrid precoding for multi-group multicast downlink
// Copyright (C) 2026 beamcast contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef BEAMCAST_CONIC_SOLVER_HPP
#define BEAMCAST_CONIC_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "beamcast/conic/embed.hpp"
#include "beamcast/conic/problem.hpp"

namespace beamcast::conic {

struct SolverTolerances {
    double eps_feas = 1e-7;    // relative constraint residual
    double eps_gap = 1e-6;     // relative primal/dual gap
    int max_iterations = 50000;
};

enum class SolveStatus { optimal, infeasible, max_iterations, numerical_failure };

struct Residuals {
    double primal = 0.0; // max relative constraint violation
    double dual = 0.0;   // relative dual residual at the last iterate
    double gap = 0.0;    // relative primal-dual objective gap
};

struct ConicSolution {
    SolveStatus status = SolveStatus::numerical_failure;
    std::vector<Eigen::MatrixXcd> block_values; // Hermitian matrix, or 1x1 scalar
    double objective_value = 0.0;
    double dual_objective = 0.0; // reported dual bound (>= objective - gap for max)
    Residuals residuals;
    double infeasibility_margin = 0.0; // max achievable slack; < 0 when infeasible
    int iterations = 0;

    double scalar_value(std::size_t block) const
    {
        return block_values.at(block)(0, 0).real();
    }
};

namespace detail {

// svec: isometric vectorization of an e x e real symmetric matrix
// (column-major lower triangle, off-diagonals scaled by sqrt(2)), so that
// tr(A*B) = svec(A).dot(svec(B)).
inline Eigen::Index svec_len(Eigen::Index e) { return e * (e + 1) / 2; }

inline void svec(const Eigen::MatrixXd &S, Eigen::Ref<Eigen::VectorXd> out)
{
    static const double rt2 = std::sqrt(2.0);
    const Eigen::Index e = S.rows();
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < e; ++j) {
        out[k++] = S(j, j);
        for (Eigen::Index i = j + 1; i < e; ++i)
            out[k++] = rt2 * S(i, j);
    }
}

inline void unsvec(const Eigen::Ref<const Eigen::VectorXd> &v, Eigen::MatrixXd &S)
{
    static const double irt2 = 1.0 / std::sqrt(2.0);
    const Eigen::Index e = S.rows();
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < e; ++j) {
        S(j, j) = v[k++];
        for (Eigen::Index i = j + 1; i < e; ++i) {
            S(i, j) = irt2 * v[k];
            S(j, i) = S(i, j);
            ++k;
        }
    }
}

struct BlockLayout {
    BlockKind kind;
    Eigen::Index dim;    // complex dimension for PSD blocks
    Eigen::Index e;      // embedded real dimension (2*dim), 1 for scalars
    Eigen::Index offset; // into the x-part of the variable vector
    Eigen::Index len;    // svec length, 1 for scalars
};

// Real-valued internal form: maximize cx.dot(x) over the cone product,
// subject to rows a_i.dot(x) (<=|=) b_i.
struct RealForm {
    std::vector<BlockLayout> layout;
    Eigen::Index n_x = 0;
    Eigen::VectorXd cx;
    Eigen::MatrixXd rows; // one constraint per row, dense, x-part only
    Eigen::VectorXd bounds;
    std::vector<bool> is_eq;
};

inline RealForm build_real_form(const ConicProblem &p)
{
    RealForm f;
    f.layout.reserve(p.blocks().size());
    for (const auto &b : p.blocks()) {
        BlockLayout l;
        l.kind = b.kind;
        l.dim = b.dim;
        if (b.kind == BlockKind::psd_hermitian) {
            l.e = 2 * b.dim;
            l.len = svec_len(l.e);
        } else {
            l.e = 1;
            l.len = 1;
        }
        l.offset = f.n_x;
        f.n_x += l.len;
        f.layout.push_back(l);
    }

    auto scatter = [&f](const std::vector<LinearTerm> &terms, Eigen::Ref<Eigen::VectorXd> row) {
        for (const auto &t : terms) {
            const BlockLayout &l = f.layout[static_cast<std::size_t>(t.block)];
            if (l.kind == BlockKind::psd_hermitian) {
                // 1/2 trace-pairing factor for the real embedding
                Eigen::VectorXd sv(l.len);
                svec(0.5 * embed_complex(t.coef), sv);
                row.segment(l.offset, l.len) += sv;
            } else {
                row[l.offset] += t.coef(0, 0).real();
            }
        }
    };

    f.cx = Eigen::VectorXd::Zero(f.n_x);
    scatter(p.objective(), f.cx);

    const Eigen::Index m = static_cast<Eigen::Index>(p.constraints().size());
    f.rows = Eigen::MatrixXd::Zero(m, f.n_x);
    f.bounds = Eigen::VectorXd::Zero(m);
    f.is_eq.resize(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        const Constraint &c = p.constraints()[static_cast<std::size_t>(i)];
        Eigen::VectorXd row = Eigen::VectorXd::Zero(f.n_x);
        scatter(c.terms, row);
        double b = c.bound;
        if (c.relation == Relation::greater_equal) {
            row = -row;
            b = -b;
        }
        f.rows.row(i) = row;
        f.bounds[i] = b;
        f.is_eq[static_cast<std::size_t>(i)] = (c.relation == Relation::equal);
    }
    return f;
}

// Projection onto the cone product: PSD blocks by eigenvalue clipping,
// scalar blocks and slacks by clamping at zero.
class ConeProjector {
  public:
    explicit ConeProjector(const std::vector<BlockLayout> &layout, Eigen::Index n_total,
                           Eigen::Index n_x)
        : layout_(layout), n_x_(n_x), n_total_(n_total)
    {
        Eigen::Index emax = 1;
        for (const auto &l : layout_)
            emax = std::max(emax, l.e);
        work_.resize(emax, emax);
    }

    void operator()(Eigen::VectorXd &v)
    {
        for (const auto &l : layout_) {
            if (l.kind == BlockKind::psd_hermitian) {
                Eigen::MatrixXd S = work_.topLeftCorner(l.e, l.e);
                unsvec(v.segment(l.offset, l.len), S);
                es_.compute(S);
                Eigen::VectorXd lam = es_.eigenvalues().cwiseMax(0.0);
                S.noalias() = es_.eigenvectors() * lam.asDiagonal() *
                              es_.eigenvectors().transpose();
                S = 0.5 * (S + S.transpose().eval());
                svec(S, v.segment(l.offset, l.len));
            } else {
                v[l.offset] = std::max(v[l.offset], 0.0);
            }
        }
        // slack variables
        v.tail(n_total_ - n_x_) = v.tail(n_total_ - n_x_).cwiseMax(0.0);
    }

  private:
    const std::vector<BlockLayout> &layout_;
    Eigen::Index n_x_;
    Eigen::Index n_total_;
    Eigen::MatrixXd work_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_;
};

ConicSolution solve_core(const ConicProblem &problem, const SolverTolerances &tol,
                         bool classify_on_stall);

// Slack-maximization classification: maximize delta subject to every
// constraint tightened by delta (equalities split two-sided). The original
// problem is feasible iff the optimal delta is >= 0; a negative optimum is
// the infeasibility margin.
inline ConicProblem build_slack_problem(const ConicProblem &p)
{
    ConicProblem s;
    for (const auto &b : p.blocks()) {
        if (b.kind == BlockKind::psd_hermitian)
            s.add_psd_block(b.dim, b.label);
        else
            s.add_nonneg_scalar(b.label);
    }
    const int dp = s.add_nonneg_scalar("slack_pos");
    const int dn = s.add_nonneg_scalar("slack_neg");
    s.add_objective_term(dp, 1.0);
    s.add_objective_term(dn, -1.0);

    auto tightened = [&](const Constraint &c, Relation rel) {
        std::vector<std::pair<int, Eigen::MatrixXcd>> terms;
        for (const auto &t : c.terms)
            terms.emplace_back(t.block, t.coef);
        const double sgn = (rel == Relation::less_equal) ? 1.0 : -1.0;
        terms.emplace_back(dp, Eigen::MatrixXcd::Constant(1, 1, sgn));
        terms.emplace_back(dn, Eigen::MatrixXcd::Constant(1, 1, -sgn));
        s.add_constraint(std::move(terms), rel, c.bound);
    };
    for (const auto &c : p.constraints()) {
        if (c.relation == Relation::equal) {
            Constraint le = c;
            le.relation = Relation::less_equal;
            Constraint ge = c;
            ge.relation = Relation::greater_equal;
            tightened(le, Relation::less_equal);
            tightened(ge, Relation::greater_equal);
        } else {
            tightened(c, c.relation);
        }
    }
    // cap: only the sign of the optimum matters, keep the problem bounded
    s.add_constraint_scalar({{dp, 1.0}, {dn, -1.0}}, Relation::less_equal, 1.0);
    return s;
}

inline ConicSolution solve_core(const ConicProblem &problem, const SolverTolerances &tol,
                                bool classify_on_stall)
{
    const RealForm f = build_real_form(problem);
    const Eigen::Index m = f.rows.rows();
    Eigen::Index n_slack = 0;
    for (bool eq : f.is_eq)
        if (!eq)
            ++n_slack;
    const Eigen::Index n = f.n_x + n_slack;

    // Row normalization and slack columns.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, n);
    Eigen::VectorXd b(m), row_scale(m);
    {
        Eigen::Index slack = f.n_x;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double r = std::max(f.rows.row(i).norm(), 1e-12);
            row_scale[i] = r;
            A.row(i).head(f.n_x) = f.rows.row(i) / r;
            b[i] = f.bounds[i] / r;
            if (!f.is_eq[static_cast<std::size_t>(i)])
                A(i, slack++) = 1.0;
        }
    }

    const double obj_scale = std::max(f.cx.norm(), 1e-12);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
    q.head(f.n_x) = -f.cx / obj_scale; // minimization form

    ConicSolution sol;
    sol.block_values.reserve(f.layout.size());

    // Cached factorization of A*A^T; complete orthogonal decomposition keeps
    // the affine projection exact when rows are linearly dependent.
    Eigen::MatrixXd AAt;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    if (m > 0) {
        AAt = A * A.transpose();
        cod.compute(AAt);
    }

    ConeProjector project(f.layout, n, f.n_x);

    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd y(n), w(n), yhat(n), z_prev(n), lambda(m);

    const double alpha = 1.6; // over-relaxation
    const int check_every = 25;

    auto extract_solution = [&](const Eigen::VectorXd &v) {
        sol.block_values.clear();
        for (const auto &l : f.layout) {
            if (l.kind == BlockKind::psd_hermitian) {
                Eigen::MatrixXd S(l.e, l.e);
                unsvec(v.segment(l.offset, l.len), S);
                sol.block_values.push_back(decode_embedded(S));
            } else {
                sol.block_values.push_back(
                    Eigen::MatrixXcd::Constant(1, 1, v[l.offset]));
            }
        }
    };

    // violation relative to the constraint's own evaluation magnitude
    auto primal_residual = [&](const Eigen::VectorXd &v) {
        const double xn = v.head(f.n_x).norm();
        double worst = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double val = row_scale[i] * A.row(i).head(f.n_x).dot(v.head(f.n_x));
            const double bb = f.bounds[i];
            double viol = val - bb;
            if (!f.is_eq[static_cast<std::size_t>(i)])
                viol = std::max(viol, 0.0);
            worst = std::max(worst,
                             std::abs(viol) / (1.0 + std::abs(bb) + row_scale[i] * xn));
        }
        return worst;
    };

    // Fixed-penalty restart ladder: most solves converge with the unit
    // penalty; strongly infeasible slack maximizations need a much stiffer
    // one. Restarting keeps the iteration deterministic.
    static constexpr double kRhoLadder[3] = {1.0, 50.0, 2500.0};
    const int budgets[3] = {tol.max_iterations / 2, tol.max_iterations / 4,
                            tol.max_iterations - tol.max_iterations / 2 -
                                tol.max_iterations / 4};

    int iters_used = 0;
    bool converged = false;
    double dual_bound = 0.0, primal_obj = 0.0, gap_rel = 0.0, dres_rel = 0.0,
           pres = 0.0;

    for (int phase = 0; phase < 3 && !converged; ++phase) {
        const double rho = kRhoLadder[phase];
        z.setZero();
        u.setZero();
        for (int iter = 1; iter <= budgets[phase]; ++iter) {
            w = z - u - q / rho;
            if (m > 0) {
                const Eigen::VectorXd rhs = A * w - b;
                lambda = cod.solve(rhs);
                // one step of iterative refinement; the rows can be nearly
                // parallel when a feasibility target sits close to the optimum
                lambda += cod.solve(rhs - AAt * lambda);
                y = w - A.transpose() * lambda;
            } else {
                y = w;
            }
            yhat = alpha * y + (1.0 - alpha) * z;
            z_prev = z;
            z = yhat + u;
            project(z);
            u += yhat - z;
            ++iters_used;

            if (iter % check_every == 0 || iter == budgets[phase]) {
                if (!z.allFinite() || !u.allFinite()) {
                    sol.status = SolveStatus::numerical_failure;
                    sol.iterations = iters_used;
                    extract_solution(z_prev);
                    return sol;
                }
                primal_obj = f.cx.dot(z.head(f.n_x));
                dual_bound = (m > 0) ? obj_scale * b.dot(rho * lambda) : primal_obj;
                pres = primal_residual(z);
                const double cons = (y - z).lpNorm<Eigen::Infinity>() /
                                    (1.0 + z.lpNorm<Eigen::Infinity>());
                dres_rel = rho * (z - z_prev).lpNorm<Eigen::Infinity>() /
                           (1.0 + rho * u.lpNorm<Eigen::Infinity>());
                gap_rel = std::abs(primal_obj - dual_bound) /
                          (1.0 + std::max(std::abs(primal_obj), std::abs(dual_bound)));
                if (pres <= tol.eps_feas && cons <= 10.0 * tol.eps_feas &&
                    gap_rel <= tol.eps_gap && dres_rel <= 10.0 * tol.eps_gap) {
                    converged = true;
                    break;
                }
            }
        }
    }

    extract_solution(z);
    sol.iterations = iters_used;
    sol.objective_value = problem.objective_offset();
    for (const auto &t : problem.objective()) {
        const auto &X = sol.block_values[static_cast<std::size_t>(t.block)];
        sol.objective_value += (t.coef.adjoint() * X).trace().real();
    }
    sol.dual_objective = dual_bound + problem.objective_offset();
    sol.residuals = {pres, dres_rel, gap_rel};

    if (converged) {
        sol.status = SolveStatus::optimal;
        return sol;
    }

    if (classify_on_stall) {
        const ConicProblem slack = build_slack_problem(problem);
        ConicSolution cls = solve_core(slack, tol, false);
        if (cls.status == SolveStatus::optimal &&
            cls.objective_value < -tol.eps_feas) {
            sol.status = SolveStatus::infeasible;
            sol.infeasibility_margin = cls.objective_value;
            return sol;
        }
    }
    sol.status = SolveStatus::max_iterations;
    return sol;
}

} // namespace detail

/// Solves a small dense conic program by over-relaxed operator splitting:
/// alternating projection onto the affine constraint set (cached
/// factorization of A*A^T) and onto the cone product (Hermitian
/// eigendecomposition with negative-eigenvalue clipping). Hitting the
/// iteration cap triggers a slack-maximization solve that either certifies
/// infeasibility (with its margin) or reports max_iterations.
inline ConicSolution solve(const ConicProblem &problem, const SolverTolerances &tol = {})
{
    return detail::solve_core(problem, tol, true);
}

} // namespace beamcast::conic

#endif
