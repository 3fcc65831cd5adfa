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

#ifndef BEAMCAST_MAXMIN_HPP
#define BEAMCAST_MAXMIN_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beamcast/conic/problem.hpp"
#include "beamcast/conic/solver.hpp"

namespace beamcast {

/// Relaxed max-min fair multicast instance: per-user Hermitian PSD gain
/// matrices Q_m, a user-to-group map, total power budget, noise variance,
/// and the quadratic power metric (identity for the fully-digital baseline,
/// F^H F for the hybrid digital stage).
struct MaxMinInstance {
    std::vector<Eigen::MatrixXcd> user_matrices; // Q_m, all D x D
    std::vector<int> membership;                 // user -> group in [0, G)
    int num_groups = 1;
    double power = 1.0;     // P
    double noise_var = 1.0; // sigma_n^2
    Eigen::MatrixXcd power_metric;

    Eigen::Index dim() const
    {
        return user_matrices.empty() ? 0 : user_matrices.front().rows();
    }
    int num_users() const { return static_cast<int>(user_matrices.size()); }

    void validate() const
    {
        if (user_matrices.empty())
            throw std::invalid_argument("MaxMinInstance: need at least one user");
        if (membership.size() != user_matrices.size())
            throw std::invalid_argument("MaxMinInstance: membership size mismatch");
        if (num_groups < 1)
            throw std::invalid_argument("MaxMinInstance: num_groups must be >= 1");
        const Eigen::Index d = dim();
        for (const auto &q : user_matrices) {
            if (q.rows() != d || q.cols() != d)
                throw std::invalid_argument("MaxMinInstance: user matrices must share one dimension");
            if (!conic::is_hermitian(q))
                throw std::invalid_argument("MaxMinInstance: user matrix is not Hermitian");
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(q, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() < -1e-10 * std::max(q.trace().real(), 1.0))
                throw std::invalid_argument("MaxMinInstance: user matrix is not PSD");
        }
        for (int g : membership)
            if (g < 0 || g >= num_groups)
                throw std::invalid_argument("MaxMinInstance: membership index out of range");
        if (!(power >= 0.0))
            throw std::invalid_argument("MaxMinInstance: power must be nonnegative");
        if (!(noise_var > 0.0))
            throw std::invalid_argument("MaxMinInstance: noise_var must be positive");
        if (power_metric.rows() != d || power_metric.cols() != d ||
            !conic::is_hermitian(power_metric))
            throw std::invalid_argument("MaxMinInstance: power metric must be Hermitian, D x D");
    }
};

/// SINR of every user for fixed beamformers, evaluated directly on the
/// instance data: w_k^H Q_m w_k over (sum_{i != k} w_i^H Q_m w_i + noise).
inline Eigen::VectorXd instance_sinrs(const MaxMinInstance &instance,
                                      const std::vector<Eigen::VectorXcd> &beamformers)
{
    if (static_cast<int>(beamformers.size()) != instance.num_groups)
        throw std::invalid_argument("instance_sinrs: need one beamformer per group");
    const int m_users = instance.num_users();
    Eigen::VectorXd sinr(m_users);
    for (int m = 0; m < m_users; ++m) {
        const auto &q = instance.user_matrices[static_cast<std::size_t>(m)];
        const int k = instance.membership[static_cast<std::size_t>(m)];
        double sig = 0.0, interf = 0.0;
        for (int i = 0; i < instance.num_groups; ++i) {
            const auto &w = beamformers[static_cast<std::size_t>(i)];
            const double p = std::max((w.adjoint() * q * w)(0).real(), 0.0);
            if (i == k)
                sig = p;
            else
                interf += p;
        }
        sinr[m] = sig / (interf + instance.noise_var);
    }
    return sinr;
}

/// Feasibility problem for SINR target t as a slack maximization: maximize
/// delta subject to tr(Q_m X_k) - t (sum_{i != k} tr(Q_m X_i) + noise) >= delta
/// for every user, the power budget, and X_k PSD. The optimal delta is
/// nonnegative exactly when t is achievable in the relaxation.
///
/// Since X = 0 attains delta = -t * noise, the slack is modeled as the
/// nonnegative variable delta + t * noise with the shift folded into the
/// reported objective; this keeps the cone product free of degenerate
/// sign-split pairs. slack_scale sizes the internal slack variable (the
/// reported objective is unaffected); passing an estimate of the expected
/// slack magnitude keeps the splitting iteration well conditioned when the
/// margins are orders of magnitude below the covariance scale.
inline conic::ConicProblem build_feasibility(const MaxMinInstance &instance, double t,
                                             double slack_scale = 1.0)
{
    if (t < 0.0)
        throw std::invalid_argument("build_feasibility: t must be nonnegative");
    if (!(slack_scale > 0.0))
        throw std::invalid_argument("build_feasibility: slack_scale must be positive");
    conic::ConicProblem p;
    std::vector<int> xs;
    xs.reserve(static_cast<std::size_t>(instance.num_groups));
    for (int k = 0; k < instance.num_groups; ++k)
        xs.push_back(p.add_psd_block(instance.dim(), "X" + std::to_string(k)));
    const int slack = p.add_nonneg_scalar("slack");
    p.add_objective_term(slack, slack_scale);
    p.set_objective_offset(-t * instance.noise_var);

    for (int m = 0; m < instance.num_users(); ++m) {
        const auto &q = instance.user_matrices[static_cast<std::size_t>(m)];
        const int k = instance.membership[static_cast<std::size_t>(m)];
        std::vector<std::pair<int, Eigen::MatrixXcd>> terms;
        for (int i = 0; i < instance.num_groups; ++i)
            terms.emplace_back(xs[static_cast<std::size_t>(i)],
                               i == k ? q : Eigen::MatrixXcd(-t * q));
        terms.emplace_back(slack, Eigen::MatrixXcd::Constant(1, 1, -slack_scale));
        p.add_constraint(std::move(terms), conic::Relation::greater_equal, 0.0);
    }

    std::vector<std::pair<int, Eigen::MatrixXcd>> power_terms;
    for (int k = 0; k < instance.num_groups; ++k)
        power_terms.emplace_back(xs[static_cast<std::size_t>(k)], instance.power_metric);
    p.add_constraint(std::move(power_terms), conic::Relation::less_equal, instance.power);
    return p;
}

namespace detail {

/// When the power metric is a positive multiple of the identity, the optimal
/// covariances are supported on span{Q_m}: projecting any feasible X onto
/// that span preserves every tr(Q_m X) and can only reduce tr(X). Solving in
/// the span (dimension <= sum of ranks) is then lossless, and results lift
/// back via X = basis * X_reduced * basis^H.
struct SpanReduction {
    MaxMinInstance work;
    Eigen::MatrixXcd basis; // D x r; empty when no reduction applies
    bool reduced = false;
};

inline SpanReduction reduce_span(const MaxMinInstance &instance)
{
    SpanReduction out;
    const Eigen::Index d = instance.dim();
    const double c = instance.power_metric.trace().real() / static_cast<double>(d);
    const bool scaled_identity =
        c > 0.0 &&
        (instance.power_metric - c * Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() <=
            1e-9 * (1.0 + std::abs(c));
    if (!scaled_identity || d <= 2) {
        out.work = instance;
        return out;
    }

    std::vector<Eigen::VectorXcd> cols;
    for (const auto &q : instance.user_matrices) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(q);
        const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
        for (Eigen::Index i = 0; i < d; ++i)
            if (es.eigenvalues()[i] > 1e-12 * std::max(lmax, 1e-300))
                cols.push_back(es.eigenvectors().col(i));
    }
    if (cols.empty() || static_cast<Eigen::Index>(cols.size()) >= d) {
        out.work = instance;
        return out;
    }
    Eigen::MatrixXcd stack(d, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i)
        stack.col(static_cast<Eigen::Index>(i)) = cols[i];
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(stack, Eigen::ComputeThinU);
    const double smax = svd.singularValues()[0];
    Eigen::Index r = 0;
    while (r < svd.singularValues().size() && svd.singularValues()[r] > 1e-10 * smax)
        ++r;
    if (r >= d) {
        out.work = instance;
        return out;
    }

    out.basis = svd.matrixU().leftCols(r);
    out.reduced = true;
    out.work.num_groups = instance.num_groups;
    out.work.membership = instance.membership;
    out.work.power = instance.power;
    out.work.noise_var = instance.noise_var;
    out.work.power_metric = c * Eigen::MatrixXcd::Identity(r, r);
    out.work.user_matrices.reserve(instance.user_matrices.size());
    for (const auto &q : instance.user_matrices) {
        Eigen::MatrixXcd qr = out.basis.adjoint() * q * out.basis;
        out.work.user_matrices.push_back(0.5 * (qr + qr.adjoint().eval()));
    }
    return out;
}

/// Rescales channels and budget to unit magnitude so the splitting solver
/// sees well-conditioned data; SINR targets t are invariant under this
/// substitution and covariances lift back by the returned factor.
struct NormalizedInstance {
    MaxMinInstance work;
    double lift_scale = 1.0; // X_original = lift_scale * X_work
};

inline NormalizedInstance normalize_instance(const MaxMinInstance &instance)
{
    NormalizedInstance out;
    double qbar = 0.0;
    for (const auto &q : instance.user_matrices)
        qbar = std::max(qbar, q.trace().real());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(instance.power_metric,
                                                       Eigen::EigenvaluesOnly);
    const double bbar = es.eigenvalues().maxCoeff();
    if (qbar <= 0.0 || bbar <= 0.0 || instance.power <= 0.0) {
        out.work = instance;
        return out;
    }
    out.work.num_groups = instance.num_groups;
    out.work.membership = instance.membership;
    out.work.power = 1.0;
    out.work.noise_var = instance.noise_var * bbar / (qbar * instance.power);
    out.work.power_metric = instance.power_metric / bbar;
    out.work.user_matrices.reserve(instance.user_matrices.size());
    for (const auto &q : instance.user_matrices)
        out.work.user_matrices.push_back(q / qbar);
    out.lift_scale = instance.power / bbar;
    return out;
}

inline double metric_min_eigenvalue(const Eigen::MatrixXcd &metric)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(metric, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    if (lmin <= 1e-12 * std::max(lmax, 1.0))
        throw std::invalid_argument("power metric must be positive definite");
    return lmin;
}

/// Feasibility of target t in balanced form: the power budget is imposed
/// with equality, which is value-preserving on the feasible side (max-min
/// uses full power) and keeps the slack at the channel-gain scale on the
/// infeasible side, where the budget-inequality form collapses to
/// t * noise_var and becomes unresolvable at high SNR. The slack is shifted
/// by the interference bound D = t * interference_cap so it stays
/// nonnegative, and scaled so the variable is order one at the optimum. The
/// reported objective equals the true slack delta, whose sign decides
/// achievability exactly as in build_feasibility.
inline conic::ConicProblem build_feasibility_balanced(const MaxMinInstance &instance,
                                                      double t, double slack_scale,
                                                      double interference_cap)
{
    const double shift = t * interference_cap;
    conic::ConicProblem p;
    std::vector<int> xs;
    xs.reserve(static_cast<std::size_t>(instance.num_groups));
    for (int k = 0; k < instance.num_groups; ++k)
        xs.push_back(p.add_psd_block(instance.dim(), "X" + std::to_string(k)));
    const int slack = p.add_nonneg_scalar("slack");
    p.add_objective_term(slack, slack_scale);
    p.set_objective_offset(-shift - t * instance.noise_var);

    for (int m = 0; m < instance.num_users(); ++m) {
        const auto &q = instance.user_matrices[static_cast<std::size_t>(m)];
        const int k = instance.membership[static_cast<std::size_t>(m)];
        std::vector<std::pair<int, Eigen::MatrixXcd>> terms;
        for (int i = 0; i < instance.num_groups; ++i)
            terms.emplace_back(xs[static_cast<std::size_t>(i)],
                               i == k ? q : Eigen::MatrixXcd(-t * q));
        terms.emplace_back(slack, Eigen::MatrixXcd::Constant(1, 1, -slack_scale));
        p.add_constraint(std::move(terms), conic::Relation::greater_equal, -shift);
    }
    std::vector<std::pair<int, Eigen::MatrixXcd>> power_terms;
    for (int k = 0; k < instance.num_groups; ++k)
        power_terms.emplace_back(xs[static_cast<std::size_t>(k)], instance.power_metric);
    p.add_constraint(std::move(power_terms), conic::Relation::equal, instance.power);
    return p;
}

/// Feasible set of target t without the slack variable, with the objective
/// sum_k <dirs_k dirs_k^H, X_k>. The optimal face of the feasibility problem
/// can hold matrices of any rank; maximizing alignment with the principal
/// directions selects an extreme point of the face, which restores the
/// rank-one structure the splitting iterate tends to smear out.
inline conic::ConicProblem build_alignment(const MaxMinInstance &instance, double t,
                                           const std::vector<Eigen::VectorXcd> &dirs)
{
    conic::ConicProblem p;
    std::vector<int> xs;
    xs.reserve(static_cast<std::size_t>(instance.num_groups));
    for (int k = 0; k < instance.num_groups; ++k)
        xs.push_back(p.add_psd_block(instance.dim(), "X" + std::to_string(k)));
    for (int k = 0; k < instance.num_groups; ++k) {
        const auto &u = dirs[static_cast<std::size_t>(k)];
        if (u.norm() > 0.0)
            p.add_objective_term(xs[static_cast<std::size_t>(k)],
                                 Eigen::MatrixXcd(u.normalized() * u.normalized().adjoint()));
    }
    for (int m = 0; m < instance.num_users(); ++m) {
        const auto &q = instance.user_matrices[static_cast<std::size_t>(m)];
        const int k = instance.membership[static_cast<std::size_t>(m)];
        std::vector<std::pair<int, Eigen::MatrixXcd>> terms;
        for (int i = 0; i < instance.num_groups; ++i)
            terms.emplace_back(xs[static_cast<std::size_t>(i)],
                               i == k ? q : Eigen::MatrixXcd(-t * q));
        p.add_constraint(std::move(terms), conic::Relation::greater_equal,
                         t * instance.noise_var);
    }
    std::vector<std::pair<int, Eigen::MatrixXcd>> power_terms;
    for (int k = 0; k < instance.num_groups; ++k)
        power_terms.emplace_back(xs[static_cast<std::size_t>(k)], instance.power_metric);
    p.add_constraint(std::move(power_terms), conic::Relation::equal, instance.power);
    return p;
}

} // namespace detail

struct PowerControlResult {
    Eigen::VectorXd powers; // per-group, nonnegative
    double t_achieved = 0.0;
};

/// Multi-group power control for fixed unit-norm directions: bisection over
/// the SINR target where each feasibility check is a linear program in the
/// per-group powers (nonnegative scalar blocks only).
inline PowerControlResult power_control(const std::vector<Eigen::VectorXcd> &directions,
                                        const MaxMinInstance &instance, double tol_t = 1e-3,
                                        const conic::SolverTolerances &solver_tol = {})
{
    const int groups = instance.num_groups;
    const int users = instance.num_users();
    if (static_cast<int>(directions.size()) != groups)
        throw std::invalid_argument("power_control: one direction per group required");

    Eigen::MatrixXd gain(users, groups);
    Eigen::VectorXd cost(groups);
    for (int k = 0; k < groups; ++k) {
        const auto &dirv = directions[static_cast<std::size_t>(k)];
        cost[k] = std::max(
            (dirv.adjoint() * instance.power_metric * dirv)(0).real(), 0.0);
        for (int m = 0; m < users; ++m)
            gain(m, k) = std::max(
                (dirv.adjoint() * instance.user_matrices[static_cast<std::size_t>(m)] * dirv)(0)
                    .real(),
                0.0);
    }

    PowerControlResult out;
    out.powers = Eigen::VectorXd::Zero(groups);

    conic::SolverTolerances lp_tol = solver_tol;
    lp_tol.eps_feas = std::max(lp_tol.eps_feas, 1e-6);
    lp_tol.eps_gap = std::max(lp_tol.eps_gap, 1e-5);

    auto min_sinr = [&](const Eigen::VectorXd &p) {
        double worst = std::numeric_limits<double>::infinity();
        for (int m = 0; m < users; ++m) {
            const int k = instance.membership[static_cast<std::size_t>(m)];
            double interf = 0.0;
            for (int i = 0; i < groups; ++i)
                if (i != k)
                    interf += p[i] * gain(m, i);
            worst = std::min(worst, p[k] * gain(m, k) / (interf + instance.noise_var));
        }
        return worst;
    };

    // a group whose own users see zero gain pins the max-min value at zero
    double t_hi = 0.0;
    for (int m = 0; m < users; ++m) {
        const int k = instance.membership[static_cast<std::size_t>(m)];
        if (gain(m, k) <= 0.0 || cost[k] <= 0.0)
            return out;
        t_hi = std::max(t_hi, gain(m, k) * instance.power / (cost[k] * instance.noise_var));
    }
    if (instance.power <= 0.0 || t_hi <= 0.0)
        return out;

    // Normalized LP data: powers substitute p = (P / max cost) * p_hat and
    // rows are divided by (P * max gain / max cost), so every coefficient is
    // order one regardless of SNR. The budget enters with equality and the
    // slack is shifted by the interference cap, mirroring the balanced
    // feasibility form of the SDP stage.
    const double gbar = std::max(gain.maxCoeff(), 1e-300);
    const double cbar = std::max(cost.maxCoeff(), 1e-300);
    Eigen::MatrixXd gain_n = gain / gbar;
    Eigen::VectorXd cost_n = cost / cbar;
    const double noise_n = instance.noise_var * cbar / (instance.power * gbar);
    double cmin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < groups; ++k)
        if (cost_n[k] > 0.0)
            cmin = std::min(cmin, cost_n[k]);
    const double interference_cap = groups > 1 ? 1.0 / cmin : 0.0;
    double margin_scale = 1e-10;
    {
        double margin0 = std::numeric_limits<double>::infinity();
        for (int m = 0; m < users; ++m) {
            const int k = instance.membership[static_cast<std::size_t>(m)];
            margin0 = std::min(margin0, gain_n(m, k) / (groups * cost_n[k]));
        }
        if (margin0 > 0.0 && std::isfinite(margin0))
            margin_scale = std::clamp(margin0, 1e-10, 1.0);
    }

    auto feasible_at = [&](double t, Eigen::VectorXd *powers) {
        const double shift = t * interference_cap;
        const double slack_scale = std::clamp(margin_scale + shift, 1e-10, 1e12);
        conic::ConicProblem lp;
        std::vector<int> ps;
        for (int k = 0; k < groups; ++k)
            ps.push_back(lp.add_nonneg_scalar("p" + std::to_string(k)));
        const int slack = lp.add_nonneg_scalar("slack");
        lp.add_objective_term(slack, slack_scale);
        lp.set_objective_offset(-shift - t * noise_n);
        for (int m = 0; m < users; ++m) {
            const int k = instance.membership[static_cast<std::size_t>(m)];
            std::vector<std::pair<int, double>> terms;
            for (int i = 0; i < groups; ++i)
                terms.emplace_back(ps[static_cast<std::size_t>(i)],
                                   i == k ? gain_n(m, k) : -t * gain_n(m, i));
            terms.emplace_back(slack, -slack_scale);
            lp.add_constraint_scalar(std::move(terms), conic::Relation::greater_equal,
                                     -shift);
        }
        std::vector<std::pair<int, double>> budget;
        for (int k = 0; k < groups; ++k)
            budget.emplace_back(ps[static_cast<std::size_t>(k)], cost_n[k]);
        lp.add_constraint_scalar(std::move(budget), conic::Relation::equal, 1.0);

        conic::ConicSolution s = conic::detail::solve_core(lp, lp_tol, false);
        if (s.status != conic::SolveStatus::optimal)
            throw std::runtime_error("power_control: LP feasibility solve failed");
        if (s.objective_value < 0.0)
            return false;
        if (powers)
            for (int k = 0; k < groups; ++k)
                (*powers)[k] = instance.power / cbar *
                               std::max(s.scalar_value(static_cast<std::size_t>(k)), 0.0);
        return true;
    };

    double t_lo = 0.0;
    Eigen::VectorXd best = Eigen::VectorXd::Zero(groups);
    bool have = false;
    while ((t_hi - t_lo) / std::max(t_hi, 1.0) >= tol_t) {
        const double t_mid = 0.5 * (t_lo + t_hi);
        Eigen::VectorXd p(groups);
        if (feasible_at(t_mid, &p)) {
            t_lo = t_mid;
            best = p;
            have = true;
        } else {
            t_hi = t_mid;
        }
    }
    if (!have)
        return out;

    // use the full budget when that does not hurt the worst user
    const double spent = best.dot(cost);
    if (spent > 0.0 && spent < instance.power) {
        Eigen::VectorXd scaled = best * (instance.power / spent);
        if (min_sinr(scaled) >= min_sinr(best) * (1.0 - 1e-12))
            best = scaled;
    }
    out.powers = best;
    out.t_achieved = std::max(min_sinr(best), 0.0);
    return out;
}

struct BisectionStep {
    double t;
    double slack; // optimal delta of the feasibility problem
    bool feasible;
};

struct BisectionResult {
    double t_feasible = 0.0; // largest t certified feasible (returned target)
    double t_upper = 0.0;    // residual upper end of the bracket
    std::vector<Eigen::MatrixXcd> blocks; // X_k from the final feasible solve
    int iterations = 0;
    int solver_calls = 0;
    std::vector<BisectionStep> history;
};

/// Bisection over the feasibility SDP: maintains [t_lo feasible, t_hi not
/// certified feasible] until the bracket is narrower than tol_t relative,
/// and returns the covariances from the final feasible solve. The initial
/// upper end is the single-user interference-free bound
/// P * max_m tr(Q_m) / (lambda_min(metric) * noise); the lower end starts
/// from the SINR achieved by per-group principal-eigenvector beams with
/// power control (a concrete witness, so feasible without a solve) and
/// doubles toward the boundary, which keeps every SDP solve close to the
/// transition where the splitting method behaves best.
inline BisectionResult bisect_maxmin(const MaxMinInstance &instance, double tol_t = 1e-3,
                                     const conic::SolverTolerances &solver_tol = {})
{
    instance.validate();
    if (!(tol_t > 0.0))
        throw std::invalid_argument("bisect_maxmin: tol_t must be positive");

    BisectionResult out;
    const double metric_lmin = detail::metric_min_eigenvalue(instance.power_metric);
    double qbar = 0.0;
    for (const auto &q : instance.user_matrices)
        qbar = std::max(qbar, q.trace().real());
    const double t_hi_init = instance.power * qbar / (metric_lmin * instance.noise_var);
    out.t_upper = t_hi_init;
    const Eigen::Index d = instance.dim();
    if (t_hi_init <= 0.0) {
        out.blocks.assign(static_cast<std::size_t>(instance.num_groups),
                          Eigen::MatrixXcd::Zero(d, d));
        return out;
    }

    const detail::SpanReduction red = detail::reduce_span(instance);
    const detail::NormalizedInstance nrm = detail::normalize_instance(red.work);

    auto lift = [&](const std::vector<Eigen::MatrixXcd> &blocks) {
        std::vector<Eigen::MatrixXcd> lifted;
        lifted.reserve(blocks.size());
        for (const auto &x : blocks) {
            Eigen::MatrixXcd full =
                red.reduced ? Eigen::MatrixXcd(red.basis * x * red.basis.adjoint()) : x;
            lifted.push_back(nrm.lift_scale * full);
        }
        return lifted;
    };

    // The loop only consumes slack signs and eigenstructure, both far coarser
    // than the certification defaults; a small floor keeps the solves clear
    // of the double-precision fixed-point plateau near 1e-7.
    conic::SolverTolerances loop_tol = solver_tol;
    loop_tol.eps_feas = std::max(loop_tol.eps_feas, 1e-6);
    loop_tol.eps_gap = std::max(loop_tol.eps_gap, 1e-5);

    double t_lo = 0.0, t_hi = t_hi_init;
    double margin_scale = 1e-10; // refined from the witness margin below

    // bound on any user's interference term over the balanced feasible set
    double interference_cap = 0.0;
    if (instance.num_groups > 1) {
        double qw = 0.0;
        for (const auto &q : nrm.work.user_matrices)
            qw = std::max(qw, q.trace().real());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> esb(nrm.work.power_metric,
                                                            Eigen::EigenvaluesOnly);
        interference_cap =
            qw * nrm.work.power / std::max(esb.eigenvalues().minCoeff(), 1e-300);
    }

    auto check = [&](double t) {
        const double slack_scale =
            std::clamp(margin_scale + t * interference_cap, 1e-10, 1e12);
        conic::ConicSolution s = conic::detail::solve_core(
            detail::build_feasibility_balanced(nrm.work, t, slack_scale,
                                               interference_cap),
            loop_tol, false);
        ++out.solver_calls;
        if (s.status != conic::SolveStatus::optimal) {
            std::ostringstream msg;
            msg << "bisect_maxmin: feasibility solve failed at t=" << t
                << " (bracket [" << t_lo << ", " << t_hi << "], iteration "
                << out.iterations << ", solver status " << static_cast<int>(s.status)
                << ")";
            throw std::runtime_error(msg.str());
        }
        return s;
    };
    std::vector<Eigen::MatrixXcd> best_blocks;
    auto record = [&](double t, const conic::ConicSolution &s) {
        const bool feasible = s.objective_value >= 0.0;
        out.history.push_back({t, s.objective_value, feasible});
        if (feasible) {
            t_lo = t;
            best_blocks.clear();
            for (int k = 0; k < instance.num_groups; ++k)
                best_blocks.push_back(s.block_values[static_cast<std::size_t>(k)]);
        } else {
            t_hi = t;
        }
        return feasible;
    };

    // Witness anchor: per-group principal-eigenvector beams under a couple of
    // direct power allocations. Any SINR achieved by concrete beamformers is
    // feasible in the relaxation, so this certifies a lower end with no solve.
    {
        const Eigen::Index wd = nrm.work.dim();
        const int groups = instance.num_groups;
        const int users = nrm.work.num_users();
        std::vector<Eigen::VectorXcd> dirs;
        dirs.reserve(static_cast<std::size_t>(groups));
        for (int k = 0; k < groups; ++k) {
            Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(wd, wd);
            for (int m = 0; m < users; ++m)
                if (nrm.work.membership[static_cast<std::size_t>(m)] == k)
                    s += nrm.work.user_matrices[static_cast<std::size_t>(m)];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s);
            if (es.eigenvalues().maxCoeff() > 0.0)
                dirs.push_back(es.eigenvectors().col(wd - 1));
            else
                dirs.push_back(Eigen::VectorXcd::Zero(wd));
        }
        Eigen::MatrixXd gain(users, groups);
        Eigen::VectorXd cost(groups), own_min(groups);
        own_min.setConstant(std::numeric_limits<double>::infinity());
        for (int k = 0; k < groups; ++k) {
            cost[k] = std::max(
                (dirs[static_cast<std::size_t>(k)].adjoint() * nrm.work.power_metric *
                 dirs[static_cast<std::size_t>(k)])(0)
                    .real(),
                1e-300);
            for (int m = 0; m < users; ++m)
                gain(m, k) = std::max((dirs[static_cast<std::size_t>(k)].adjoint() *
                                       nrm.work.user_matrices[static_cast<std::size_t>(m)] *
                                       dirs[static_cast<std::size_t>(k)])(0)
                                          .real(),
                                      0.0);
        }
        for (int m = 0; m < users; ++m) {
            const int k = nrm.work.membership[static_cast<std::size_t>(m)];
            own_min[k] = std::min(own_min[k], gain(m, k));
        }
        auto min_sinr = [&](const Eigen::VectorXd &p) {
            double worst = std::numeric_limits<double>::infinity();
            for (int m = 0; m < users; ++m) {
                const int k = nrm.work.membership[static_cast<std::size_t>(m)];
                double interf = 0.0;
                for (int i = 0; i < groups; ++i)
                    if (i != k)
                        interf += p[i] * gain(m, i);
                worst = std::min(worst,
                                 p[k] * gain(m, k) / (interf + nrm.work.noise_var));
            }
            return worst;
        };
        auto own_margin = [&](const Eigen::VectorXd &p) {
            double worst = std::numeric_limits<double>::infinity();
            for (int m = 0; m < users; ++m) {
                const int k = nrm.work.membership[static_cast<std::size_t>(m)];
                worst = std::min(worst, p[k] * gain(m, k));
            }
            return worst;
        };
        double anchor = 0.0;
        double margin0 = 0.0; // witness matched power at t = 0, sizes the slack
        {
            // equal power per beam
            Eigen::VectorXd p = Eigen::VectorXd::Zero(groups);
            for (int k = 0; k < groups; ++k)
                p[k] = nrm.work.power / (groups * cost[k]);
            anchor = std::max(anchor, min_sinr(p));
            margin0 = std::max(margin0, own_margin(p));
            // weight toward the group whose weakest user matches worst
            Eigen::VectorXd wgt(groups);
            for (int k = 0; k < groups; ++k)
                wgt[k] = 1.0 / std::max(own_min[k], 1e-300);
            if (wgt.allFinite() && wgt.maxCoeff() < 1e290) {
                const double denom = wgt.dot(cost);
                if (denom > 0.0) {
                    const Eigen::VectorXd pw = nrm.work.power / denom * wgt;
                    anchor = std::max(anchor, min_sinr(pw));
                    margin0 = std::max(margin0, own_margin(pw));
                }
            }
        }
        // slack magnitude at t = 0: at least the witness margin, and around
        // the weakest user's matched power at a 1/G budget share
        double weakest = std::numeric_limits<double>::infinity();
        for (const auto &q : nrm.work.user_matrices)
            weakest = std::min(weakest, q.trace().real());
        margin0 = std::max(margin0, weakest * nrm.work.power / groups);
        if (margin0 > 0.0 && std::isfinite(margin0))
            margin_scale = std::clamp(margin0, 1e-10, 1.0);
        anchor *= 1.0 - 1e-9;
        if (anchor > 0.0 && anchor < t_hi) {
            t_lo = anchor;
            double probe = anchor;
            while (2.0 * probe < t_hi) {
                probe *= 2.0;
                ++out.iterations;
                if (!record(probe, check(probe)))
                    break;
            }
        }
    }

    while ((t_hi - t_lo) / std::max(t_hi, 1.0) >= tol_t) {
        ++out.iterations;
        const double t_mid = 0.5 * (t_lo + t_hi);
        record(t_mid, check(t_mid));
    }
    out.t_feasible = t_lo;
    out.t_upper = t_hi;

    if (best_blocks.empty()) {
        // every probe was infeasible; take the slack-maximizing point at the
        // certified lower end (t_lo = 0 or the witness anchor)
        conic::ConicSolution s = check(t_lo);
        for (int k = 0; k < instance.num_groups; ++k)
            best_blocks.push_back(s.block_values[static_cast<std::size_t>(k)]);
    }

    // Final feasible solve: align each block with its principal direction to
    // land on an extreme point of the feasible set instead of a smeared face
    // point. Backing the target off a little gives the set enough interior
    // for the solve to converge quickly; the loss stays inside tol_t.
    {
        const double backoff = std::max(0.5 * tol_t, 5e-4);
        const double t_polish = t_lo * (1.0 - backoff);
        std::vector<Eigen::VectorXcd> dirs;
        dirs.reserve(best_blocks.size());
        for (const auto &x : best_blocks) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(x);
            const Eigen::Index top = x.rows() - 1;
            dirs.push_back(es.eigenvalues()[top] > 0.0
                               ? Eigen::VectorXcd(es.eigenvectors().col(top))
                               : Eigen::VectorXcd::Zero(x.rows()).eval());
        }
        conic::ConicSolution s = conic::detail::solve_core(
            detail::build_alignment(nrm.work, t_polish, dirs), loop_tol, false);
        ++out.solver_calls;
        if (s.status == conic::SolveStatus::optimal) {
            auto min_ratio = [](const std::vector<Eigen::MatrixXcd> &blocks) {
                double worst = 1.0;
                for (const auto &x : blocks) {
                    const double tr = x.trace().real();
                    if (tr <= 0.0)
                        continue;
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
                        x, Eigen::EigenvaluesOnly);
                    worst = std::min(worst, es.eigenvalues().maxCoeff() / tr);
                }
                return worst;
            };
            std::vector<Eigen::MatrixXcd> polished;
            for (int k = 0; k < instance.num_groups; ++k)
                polished.push_back(s.block_values[static_cast<std::size_t>(k)]);
            if (min_ratio(polished) >= min_ratio(best_blocks))
                best_blocks = std::move(polished);
        }
    }

    out.blocks = lift(best_blocks);
    return out;
}

/// Principal component of a PSD matrix: returns sqrt(lambda_1) * u_1 and the
/// rank ratio lambda_1 / tr(X); a zero matrix maps to the zero vector with
/// ratio 0.
struct RankOneExtraction {
    Eigen::VectorXcd vector;
    double rank_ratio = 0.0;
};

inline RankOneExtraction extract_rank_one(const Eigen::MatrixXcd &x)
{
    if (!conic::is_hermitian(x))
        throw std::invalid_argument("extract_rank_one: matrix is not Hermitian");
    RankOneExtraction out;
    const double tr = x.trace().real();
    if (tr <= 1e-14 * (1.0 + x.cwiseAbs().maxCoeff())) {
        out.vector = Eigen::VectorXcd::Zero(x.rows());
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(x);
    const Eigen::Index top = x.rows() - 1;
    const double l1 = std::max(es.eigenvalues()[top], 0.0);
    out.vector = std::sqrt(l1) * es.eigenvectors().col(top);
    out.rank_ratio = l1 / tr;
    return out;
}

/// One draw from CN(0, cov) via the eigenfactorization cov = R R^H.
inline Eigen::VectorXcd sample_complex_gaussian(const Eigen::MatrixXcd &cov,
                                                std::mt19937_64 &rng)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cov);
    const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXcd factor = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double irt2 = 1.0 / std::sqrt(2.0);
    Eigen::VectorXcd z(cov.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        z[i] = std::complex<double>(re * irt2, im * irt2);
    }
    return factor * z;
}

/// Candidate direction sets for rank-one recovery: candidate 0 is the
/// deterministic principal-eigenvector set; the rest draw g_k ~ CN(0, X_k)
/// and normalize. Deterministic given the seed.
inline std::vector<std::vector<Eigen::VectorXcd>>
gaussian_randomization(const std::vector<Eigen::MatrixXcd> &blocks,
                       const MaxMinInstance &instance, int num_candidates,
                       std::uint64_t rng_seed)
{
    if (num_candidates < 1)
        throw std::invalid_argument("gaussian_randomization: need at least one candidate");
    if (static_cast<int>(blocks.size()) != instance.num_groups)
        throw std::invalid_argument("gaussian_randomization: one block per group required");

    auto normalize = [](Eigen::VectorXcd v) {
        const double n = v.norm();
        return n > 1e-300 ? Eigen::VectorXcd(v / n) : Eigen::VectorXcd::Zero(v.size()).eval();
    };

    std::vector<Eigen::MatrixXcd> factors;
    std::vector<Eigen::VectorXcd> principal;
    factors.reserve(blocks.size());
    for (const auto &x : blocks) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(x);
        const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
        factors.push_back(es.eigenvectors() * lam.cwiseSqrt().asDiagonal());
        const Eigen::Index top = x.rows() - 1;
        principal.push_back(lam[top] > 0.0 ? normalize(es.eigenvectors().col(top))
                                           : Eigen::VectorXcd::Zero(x.rows()).eval());
    }

    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double irt2 = 1.0 / std::sqrt(2.0);

    std::vector<std::vector<Eigen::VectorXcd>> out;
    out.reserve(static_cast<std::size_t>(num_candidates));
    out.push_back(principal);
    for (int c = 1; c < num_candidates; ++c) {
        std::vector<Eigen::VectorXcd> cand;
        cand.reserve(blocks.size());
        for (const auto &factor : factors) {
            Eigen::VectorXcd z(factor.cols());
            for (Eigen::Index i = 0; i < z.size(); ++i) {
                const double re = gauss(rng);
                const double im = gauss(rng);
                z[i] = std::complex<double>(re * irt2, im * irt2);
            }
            cand.push_back(normalize(factor * z));
        }
        out.push_back(std::move(cand));
    }
    return out;
}

struct MaxMinOptions {
    double tol_t = 1e-3;              // relative bisection tolerance
    int num_candidates = 200;         // Gaussian randomization draws
    double rank_one_threshold = 0.999;
    std::uint64_t rng_seed = 12345;
    conic::SolverTolerances solver{};
};

struct MaxMinSolution {
    double relaxed_value = 0.0; // t_SDR, upper bound from the bisection
    std::vector<Eigen::MatrixXcd> covariance_blocks;
    std::vector<Eigen::VectorXcd> beamformers;
    double achieved_value = 0.0; // t from the extracted beamformers
    std::vector<double> rank_ratios;
    bool feasible = true;
    bool used_randomization = false;
    int bisection_iterations = 0;
    int solver_calls = 0;
};

/// End-to-end relaxed max-min solve: bisection, then rank-one extraction
/// when every block is (numerically) rank one, otherwise Gaussian
/// randomization with per-candidate multi-group power control. Ties between
/// candidates break toward the lowest index.
inline MaxMinSolution solve_maxmin(const MaxMinInstance &instance,
                                   const MaxMinOptions &opts = {})
{
    instance.validate();
    MaxMinSolution sol;
    BisectionResult bis = bisect_maxmin(instance, opts.tol_t, opts.solver);
    sol.relaxed_value = bis.t_upper;
    sol.covariance_blocks = bis.blocks;
    sol.bisection_iterations = bis.iterations;
    sol.solver_calls = bis.solver_calls;

    const Eigen::Index d = instance.dim();
    if (bis.t_upper <= 0.0 || bis.blocks.empty()) {
        sol.beamformers.assign(static_cast<std::size_t>(instance.num_groups),
                               Eigen::VectorXcd::Zero(d));
        sol.rank_ratios.assign(static_cast<std::size_t>(instance.num_groups), 0.0);
        return sol;
    }

    sol.rank_ratios.reserve(bis.blocks.size());
    std::vector<RankOneExtraction> extractions;
    extractions.reserve(bis.blocks.size());
    double min_ratio = 1.0;
    for (const auto &x : bis.blocks) {
        extractions.push_back(extract_rank_one(x));
        sol.rank_ratios.push_back(extractions.back().rank_ratio);
        min_ratio = std::min(min_ratio, extractions.back().rank_ratio);
    }

    if (min_ratio >= opts.rank_one_threshold) {
        for (const auto &e : extractions)
            sol.beamformers.push_back(e.vector);
    } else {
        sol.used_randomization = true;
        const auto candidates = gaussian_randomization(bis.blocks, instance,
                                                       opts.num_candidates, opts.rng_seed);
        double best_t = -1.0;
        std::vector<Eigen::VectorXcd> best_w;
        for (const auto &cand : candidates) {
            PowerControlResult pc = power_control(cand, instance, opts.tol_t, opts.solver);
            if (pc.t_achieved > best_t) {
                best_t = pc.t_achieved;
                best_w.clear();
                for (int k = 0; k < instance.num_groups; ++k)
                    best_w.push_back(std::sqrt(std::max(pc.powers[k], 0.0)) *
                                     cand[static_cast<std::size_t>(k)]);
            }
        }
        sol.beamformers = std::move(best_w);
    }

    // enforce the hard budget (solver tolerance can leave a hair of excess),
    // then spend the full budget when that cannot hurt the worst user
    double spent = 0.0;
    for (const auto &w : sol.beamformers)
        spent += std::max((w.adjoint() * instance.power_metric * w)(0).real(), 0.0);
    if (spent > instance.power) {
        const double s = std::sqrt(instance.power / spent);
        for (auto &w : sol.beamformers)
            w *= s;
    } else if (spent > 0.0 && spent < instance.power) {
        const double s = std::sqrt(instance.power / spent);
        std::vector<Eigen::VectorXcd> scaled;
        scaled.reserve(sol.beamformers.size());
        for (const auto &w : sol.beamformers)
            scaled.push_back(s * w);
        if (instance_sinrs(instance, scaled).minCoeff() >=
            instance_sinrs(instance, sol.beamformers).minCoeff() * (1.0 - 1e-12))
            sol.beamformers = std::move(scaled);
    }

    sol.achieved_value = instance_sinrs(instance, sol.beamformers).minCoeff();
    return sol;
}

} // namespace beamcast

#endif
