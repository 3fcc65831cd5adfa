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

#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>
#include <sstream>

#include "beamcast/conic/embed.hpp"
#include "beamcast/conic/problem.hpp"
#include "beamcast/conic/solver.hpp"

using namespace beamcast::conic;
using Catch::Approx;
using cplx = std::complex<double>;

namespace {

Eigen::MatrixXcd random_hermitian(int d, std::mt19937_64 &rng, double scale = 1.0)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXcd M(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            M(i, j) = cplx(g(rng), g(rng));
    Eigen::MatrixXcd H = 0.5 * (M + M.adjoint());
    return scale * H / std::max(H.norm(), 1e-12);
}

Eigen::VectorXcd random_unit(int d, std::mt19937_64 &rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXcd v(d);
    for (int i = 0; i < d; ++i)
        v[i] = cplx(g(rng), g(rng));
    return v / v.norm();
}

} // namespace

TEST_CASE("embed_complex maps identity to identity")
{
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXd S = embed_complex(H);
    REQUIRE(S.isApprox(Eigen::MatrixXd::Identity(4, 4)));
}

TEST_CASE("embed_complex doubles the Pauli-Y spectrum")
{
    Eigen::MatrixXcd H(2, 2);
    H << cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0);
    Eigen::MatrixXd S = embed_complex(H);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    Eigen::VectorXd ev = es.eigenvalues();
    REQUIRE(ev[0] == Approx(-1.0));
    REQUIRE(ev[1] == Approx(-1.0));
    REQUIRE(ev[2] == Approx(1.0));
    REQUIRE(ev[3] == Approx(1.0));
}

TEST_CASE("embed_complex preserves a random Hermitian spectrum, doubled")
{
    std::mt19937_64 rng(7);
    Eigen::MatrixXcd H = random_hermitian(3, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ec(H);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(embed_complex(H));
    Eigen::VectorXd evc = ec.eigenvalues();
    Eigen::VectorXd evr = er.eigenvalues();
    for (int i = 0; i < 3; ++i) {
        REQUIRE(evr[2 * i] == Approx(evc[i]).margin(1e-12));
        REQUIRE(evr[2 * i + 1] == Approx(evc[i]).margin(1e-12));
    }
}

TEST_CASE("embedding trace pairing carries the 1/2 factor")
{
    std::mt19937_64 rng(11);
    Eigen::MatrixXcd H1 = random_hermitian(3, rng);
    Eigen::MatrixXcd H2 = random_hermitian(3, rng);
    const double direct = (H1 * H2).trace().real();
    const double embedded = (embed_complex(H1) * embed_complex(H2)).trace();
    REQUIRE(direct == Approx(0.5 * embedded).margin(1e-12));
}

TEST_CASE("embed_complex rejects non-Hermitian input")
{
    Eigen::MatrixXcd H(2, 2);
    H << cplx(1, 0), cplx(2, 0), cplx(3, 0), cplx(1, 0);
    REQUIRE_THROWS_AS(embed_complex(H), std::invalid_argument);
}

TEST_CASE("decode_embedded inverts the embedding")
{
    std::mt19937_64 rng(13);
    Eigen::MatrixXcd H = random_hermitian(4, rng);
    REQUIRE(decode_embedded(embed_complex(H)).isApprox(H, 1e-12));
}

TEST_CASE("solve: max t with [[1,t],[t,1]] PSD gives t = 1")
{
    ConicProblem p;
    const int x = p.add_psd_block(2, "X");
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(2, 2);
    C(0, 1) = 0.5;
    C(1, 0) = 0.5;
    p.add_objective_term(x, C);
    Eigen::MatrixXcd E00 = Eigen::MatrixXcd::Zero(2, 2);
    E00(0, 0) = 1.0;
    Eigen::MatrixXcd E11 = Eigen::MatrixXcd::Zero(2, 2);
    E11(1, 1) = 1.0;
    p.add_constraint({{x, E00}}, Relation::equal, 1.0);
    p.add_constraint({{x, E11}}, Relation::equal, 1.0);

    ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    REQUIRE(s.objective_value == Approx(1.0).margin(1e-5));
}

TEST_CASE("solve: max tr(QX) with tr(X)=1 is the top eigenpair")
{
    std::mt19937_64 rng(17);
    Eigen::MatrixXcd Q = random_hermitian(3, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Q);
    const double lmax = es.eigenvalues().maxCoeff();
    Eigen::VectorXcd u = es.eigenvectors().col(2);

    ConicProblem p;
    const int x = p.add_psd_block(3, "X");
    p.add_objective_term(x, Q);
    p.add_constraint({{x, Eigen::MatrixXcd::Identity(3, 3)}}, Relation::equal, 1.0);

    ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    REQUIRE(s.objective_value == Approx(lmax).margin(1e-5));
    REQUIRE((s.block_values[0] - u * u.adjoint()).norm() < 1e-4);
}

namespace {

// Independent oracle for max tr(QX) s.t. tr(X)=1, tr(AX)<=b, X PSD:
// dual grid over the multiplier (bound = min_mu lmax(Q - mu*A) + mu*b)
// plus an eigen-basis search for primal candidates in the top-2 eigenspace.
struct OracleResult {
    double best_primal;
    double dual_bound;
};

OracleResult grid_oracle(const Eigen::MatrixXcd &Q, const Eigen::MatrixXcd &A, double b)
{
    double best = -std::numeric_limits<double>::infinity();
    double bound = std::numeric_limits<double>::infinity();
    auto consider = [&](const Eigen::VectorXcd &v) {
        const double av = (v.adjoint() * A * v)(0).real();
        if (av <= b + 1e-12)
            best = std::max(best, (v.adjoint() * Q * v)(0).real());
    };
    double mu_star = 0.0;
    for (int gi = 0; gi <= 4000; ++gi) {
        const double mu = 40.0 * gi / 4000.0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Q - mu * A);
        const double g = es.eigenvalues().maxCoeff() + mu * b;
        if (g < bound) {
            bound = g;
            mu_star = mu;
        }
        consider(es.eigenvectors().col(Q.rows() - 1));
    }
    // intensive eigen-basis search in the top-2 eigenspace near the dual
    // optimum, where complementarity makes the primal optimum live
    for (int gi = -30; gi <= 30; ++gi) {
        const double mu = std::max(0.0, mu_star + 0.01 * gi);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Q - mu * A);
        const Eigen::VectorXcd v1 = es.eigenvectors().col(Q.rows() - 1);
        const Eigen::VectorXcd v2 = es.eigenvectors().col(Q.rows() - 2);
        for (int ti = 0; ti <= 150; ++ti) {
            const double th = 0.5 * std::numbers::pi * ti / 150.0;
            for (int pi_ = 0; pi_ < 64; ++pi_) {
                const double ph = 2.0 * std::numbers::pi * pi_ / 64.0;
                consider(std::cos(th) * v1 +
                         std::sin(th) * std::polar(1.0, ph) * v2);
            }
        }
    }
    return {best, bound};
}

} // namespace

TEST_CASE("solve matches the grid/eigen-basis oracle on constrained instances")
{
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 8; ++trial) {
        Eigen::MatrixXcd Q = random_hermitian(3, rng);
        Eigen::MatrixXcd A = random_hermitian(3, rng);
        Eigen::VectorXcd v0 = random_unit(3, rng);
        const double b = (v0.adjoint() * A * v0)(0).real() + 0.25;

        ConicProblem p;
        const int x = p.add_psd_block(3, "X");
        p.add_objective_term(x, Q);
        p.add_constraint({{x, Eigen::MatrixXcd::Identity(3, 3)}}, Relation::equal, 1.0);
        p.add_constraint({{x, A}}, Relation::less_equal, b);

        ConicSolution s = solve(p);
        REQUIRE(s.status == SolveStatus::optimal);

        OracleResult o = grid_oracle(Q, A, b);
        INFO("trial " << trial << " primal " << o.best_primal << " bound " << o.dual_bound);
        REQUIRE(o.dual_bound - o.best_primal < 5e-4 * (1.0 + std::abs(o.best_primal)));
        REQUIRE(s.objective_value ==
                Approx(o.best_primal).margin(1e-3 * (1.0 + std::abs(o.best_primal))));
    }
}

TEST_CASE("weak duality and feasibility residuals on random instances")
{
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 25; ++trial) {
        const int d = 2 + static_cast<int>(rng() % 3);
        Eigen::MatrixXcd Q = random_hermitian(d, rng);
        Eigen::MatrixXcd A1 = random_hermitian(d, rng);
        Eigen::MatrixXcd A2 = random_hermitian(d, rng);
        const Eigen::MatrixXcd X0 = 0.4 * Eigen::MatrixXcd::Identity(d, d);
        std::uniform_real_distribution<double> uc(-1.0, 1.0);
        const double cy = uc(rng);

        ConicProblem p;
        const int x = p.add_psd_block(d, "X");
        const int y = p.add_nonneg_scalar("y");
        p.add_objective_term(x, Q);
        p.add_objective_term(y, cy);
        // bounding constraint holds at (X0, 0.1) with margin
        p.add_constraint({{x, Eigen::MatrixXcd::Identity(d, d)},
                          {y, Eigen::MatrixXcd::Constant(1, 1, 1.0)}},
                         Relation::less_equal, 0.4 * d + 0.6);
        p.add_constraint({{x, A1}}, Relation::less_equal,
                         (A1 * X0).trace().real() + 0.3);
        p.add_constraint({{x, A2}, {y, Eigen::MatrixXcd::Constant(1, 1, -0.5)}},
                         Relation::equal, (A2 * X0).trace().real() - 0.05);

        ConicSolution s = solve(p);
        INFO("trial " << trial);
        REQUIRE(s.status == SolveStatus::optimal);
        // feasibility residuals
        REQUIRE(s.residuals.primal <= 1e-7);
        // PSD block min eigenvalue within tolerance of the cone
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s.block_values[0]);
        const double tr = s.block_values[0].trace().real();
        REQUIRE(es.eigenvalues().minCoeff() >= -1e-8 * (tr + 1.0));
        // weak duality for maximization
        REQUIRE(s.dual_objective >=
                s.objective_value - 1e-5 * (1.0 + std::abs(s.objective_value)));
    }
}

TEST_CASE("solve is deterministic")
{
    std::mt19937_64 rng(31);
    Eigen::MatrixXcd Q = random_hermitian(3, rng);
    ConicProblem p;
    const int x = p.add_psd_block(3, "X");
    p.add_objective_term(x, Q);
    p.add_constraint({{x, Eigen::MatrixXcd::Identity(3, 3)}}, Relation::less_equal, 2.0);

    ConicSolution a = solve(p);
    ConicSolution b = solve(p);
    REQUIRE(a.status == b.status);
    REQUIRE(a.objective_value == Approx(b.objective_value).margin(1e-10));
    REQUIRE(a.iterations == b.iterations);
}

TEST_CASE("scaling bounds or objective by c scales the optimum by c")
{
    std::mt19937_64 rng(37);
    Eigen::MatrixXcd Q = random_hermitian(3, rng);
    Eigen::MatrixXcd A = random_hermitian(3, rng);
    const double b = 0.2;
    const double c = 4.0;

    auto build = [&](double obj_scale, double bound_scale) {
        ConicProblem p;
        const int x = p.add_psd_block(3, "X");
        p.add_objective_term(x, obj_scale * Q);
        p.add_constraint({{x, Eigen::MatrixXcd::Identity(3, 3)}}, Relation::equal,
                         bound_scale * 1.0);
        p.add_constraint({{x, A}}, Relation::less_equal, bound_scale * b);
        return solve(p);
    };

    ConicSolution base = build(1.0, 1.0);
    ConicSolution scaled_bounds = build(1.0, c);
    ConicSolution scaled_obj = build(c, 1.0);
    REQUIRE(base.status == SolveStatus::optimal);
    REQUIRE(scaled_bounds.status == SolveStatus::optimal);
    REQUIRE(scaled_obj.status == SolveStatus::optimal);
    const double tol = 1e-4 * (1.0 + std::abs(c * base.objective_value));
    REQUIRE(scaled_bounds.objective_value == Approx(c * base.objective_value).margin(tol));
    REQUIRE(scaled_obj.objective_value == Approx(c * base.objective_value).margin(tol));
}

TEST_CASE("infeasible constraints are certified with a margin")
{
    ConicProblem p;
    const int x = p.add_psd_block(2, "X");
    p.add_objective_term(x, Eigen::MatrixXcd::Identity(2, 2));
    p.add_constraint({{x, Eigen::MatrixXcd::Identity(2, 2)}}, Relation::less_equal, 1.0);
    p.add_constraint({{x, Eigen::MatrixXcd::Identity(2, 2)}}, Relation::greater_equal, 2.0);

    ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::infeasible);
    REQUIRE(s.infeasibility_margin == Approx(-0.5).margin(1e-4));
}

TEST_CASE("iteration cap reports max_iterations, never a silent answer")
{
    std::mt19937_64 rng(41);
    Eigen::MatrixXcd Q = random_hermitian(4, rng);
    ConicProblem p;
    const int x = p.add_psd_block(4, "X");
    p.add_objective_term(x, Q);
    p.add_constraint({{x, Eigen::MatrixXcd::Identity(4, 4)}}, Relation::equal, 1.0);

    SolverTolerances tight;
    tight.max_iterations = 10;
    tight.eps_feas = 1e-12;
    tight.eps_gap = 1e-12;
    ConicSolution s = solve(p, tight);
    REQUIRE(s.status == SolveStatus::max_iterations);
}

TEST_CASE("nonnegative scalar LP")
{
    ConicProblem p;
    const int x = p.add_nonneg_scalar("x");
    const int y = p.add_nonneg_scalar("y");
    p.add_objective_term(x, 1.0);
    p.add_objective_term(y, 2.0);
    p.add_constraint_scalar({{x, 1.0}, {y, 1.0}}, Relation::less_equal, 3.0);
    p.add_constraint_scalar({{y, 1.0}}, Relation::less_equal, 1.0);

    ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    REQUIRE(s.objective_value == Approx(4.0).margin(1e-5));
    REQUIRE(s.scalar_value(0) == Approx(2.0).margin(1e-4));
    REQUIRE(s.scalar_value(1) == Approx(1.0).margin(1e-4));
}

TEST_CASE("problem dump emits the triplet format")
{
    ConicProblem p;
    const int x = p.add_psd_block(2, "X");
    const int t = p.add_nonneg_scalar("t");
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(2, 2);
    C(0, 1) = cplx(0.0, -0.5);
    C(1, 0) = cplx(0.0, 0.5);
    p.add_objective_term(x, C);
    p.add_constraint({{x, Eigen::MatrixXcd::Identity(2, 2)},
                      {t, Eigen::MatrixXcd::Constant(1, 1, -1.0)}},
                     Relation::less_equal, 2.0);

    std::ostringstream os;
    p.dump(os);
    const std::string text = os.str();
    REQUIRE(text.find("blocks\n") == 0);
    REQUIRE(text.find("block X psd_hermitian 2") != std::string::npos);
    REQUIRE(text.find("block t nonneg_scalar 1") != std::string::npos);
    REQUIRE(text.find("coef obj 0 0 1 0 -0.5") != std::string::npos);
    REQUIRE(text.find("coef 0 0 0 0 1 0") != std::string::npos);
    REQUIRE(text.find("coef 0 1 0 0 -1 0") != std::string::npos);
}

TEST_CASE("coefficient validation")
{
    ConicProblem p;
    const int x = p.add_psd_block(2, "X");
    Eigen::MatrixXcd bad(2, 2);
    bad << cplx(1, 0), cplx(1, 1), cplx(1, 1), cplx(0, 0); // not Hermitian
    REQUIRE_THROWS_AS(p.add_objective_term(x, bad), std::invalid_argument);
    REQUIRE_THROWS_AS(p.add_objective_term(x, Eigen::MatrixXcd::Identity(3, 3)),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(p.add_objective_term(5, Eigen::MatrixXcd::Identity(2, 2)),
                      std::invalid_argument);
}
