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

#ifndef BEAMCAST_CONIC_PROBLEM_HPP
#define BEAMCAST_CONIC_PROBLEM_HPP

#include <cmath>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "beamcast/conic/embed.hpp"

namespace beamcast::conic {

enum class BlockKind { psd_hermitian, nonneg_scalar };

struct BlockSpec {
    BlockKind kind;
    Eigen::Index dim; // 1 for nonneg_scalar
    std::string label;
};

enum class Relation { less_equal, equal, greater_equal };

/// One addend of a linear functional: Re tr(coef * X_block) for PSD blocks,
/// coef(0,0).real() * x_block for scalar blocks.
struct LinearTerm {
    int block;
    Eigen::MatrixXcd coef; // Hermitian, dimension-matched to the block
};

struct Constraint {
    std::vector<LinearTerm> terms;
    Relation relation;
    double bound;
};

/// A small dense conic program with a linear objective (maximized), linear
/// equality/inequality constraints, Hermitian-PSD blocks and nonnegative
/// scalar blocks. Coefficients pair with PSD blocks through real trace
/// pairings; at least one constraint must bound the objective direction.
class ConicProblem {
  public:
    int add_psd_block(Eigen::Index dim, std::string label)
    {
        if (dim < 1)
            throw std::invalid_argument("add_psd_block: dim must be >= 1");
        blocks_.push_back({BlockKind::psd_hermitian, dim, std::move(label)});
        return static_cast<int>(blocks_.size()) - 1;
    }

    int add_nonneg_scalar(std::string label)
    {
        blocks_.push_back({BlockKind::nonneg_scalar, 1, std::move(label)});
        return static_cast<int>(blocks_.size()) - 1;
    }

    void add_objective_term(int block, const Eigen::MatrixXcd &coef)
    {
        objective_.push_back(make_term(block, coef));
    }

    void add_objective_term(int block, double coef)
    {
        add_objective_term(block, Eigen::MatrixXcd::Constant(1, 1, coef));
    }

    /// Constant added to the reported objective value (does not affect the
    /// optimizer).
    void set_objective_offset(double offset) { objective_offset_ = offset; }
    double objective_offset() const { return objective_offset_; }

    int add_constraint(std::vector<std::pair<int, Eigen::MatrixXcd>> terms,
                       Relation relation, double bound)
    {
        Constraint c;
        for (auto &[block, coef] : terms)
            c.terms.push_back(make_term(block, coef));
        c.relation = relation;
        if (!std::isfinite(bound))
            throw std::invalid_argument("add_constraint: bound must be finite");
        c.bound = bound;
        constraints_.push_back(std::move(c));
        return static_cast<int>(constraints_.size()) - 1;
    }

    /// Scalar-block convenience overload.
    int add_constraint_scalar(std::vector<std::pair<int, double>> terms,
                              Relation relation, double bound)
    {
        std::vector<std::pair<int, Eigen::MatrixXcd>> ts;
        ts.reserve(terms.size());
        for (auto &[block, coef] : terms)
            ts.emplace_back(block, Eigen::MatrixXcd::Constant(1, 1, coef));
        return add_constraint(std::move(ts), relation, bound);
    }

    const std::vector<BlockSpec> &blocks() const { return blocks_; }
    const std::vector<LinearTerm> &objective() const { return objective_; }
    const std::vector<Constraint> &constraints() const { return constraints_; }

    /// Debug dump: sparse triplet listing of all coefficient matrices.
    /// Lines: `blocks`, then `block <label> <kind> <dim>`, then
    /// `coef <constraint#|obj> <block> <row> <col> <re> <im>` (upper
    /// triangle including the diagonal).
    void dump(std::ostream &os) const
    {
        os << "blocks\n";
        for (const auto &b : blocks_)
            os << "block " << b.label << ' '
               << (b.kind == BlockKind::psd_hermitian ? "psd_hermitian" : "nonneg_scalar")
               << ' ' << b.dim << '\n';
        auto dump_terms = [&os](const std::string &tag, const std::vector<LinearTerm> &terms) {
            for (const auto &t : terms)
                for (Eigen::Index r = 0; r < t.coef.rows(); ++r)
                    for (Eigen::Index c = r; c < t.coef.cols(); ++c) {
                        const std::complex<double> v = t.coef(r, c);
                        if (v != 0.0)
                            os << "coef " << tag << ' ' << t.block << ' ' << r << ' ' << c
                               << ' ' << v.real() << ' ' << v.imag() << '\n';
                    }
        };
        dump_terms("obj", objective_);
        for (std::size_t i = 0; i < constraints_.size(); ++i)
            dump_terms(std::to_string(i), constraints_[i].terms);
    }

  private:
    LinearTerm make_term(int block, const Eigen::MatrixXcd &coef) const
    {
        if (block < 0 || block >= static_cast<int>(blocks_.size()))
            throw std::invalid_argument("linear term references unknown block");
        const BlockSpec &spec = blocks_[static_cast<std::size_t>(block)];
        if (coef.rows() != spec.dim || coef.cols() != spec.dim)
            throw std::invalid_argument("coefficient dimension does not match block");
        if (!coef.allFinite())
            throw std::invalid_argument("coefficient has non-finite entries");
        if (spec.kind == BlockKind::psd_hermitian && !is_hermitian(coef))
            throw std::invalid_argument("coefficient for PSD block is not Hermitian");
        return {block, coef};
    }

    std::vector<BlockSpec> blocks_;
    std::vector<LinearTerm> objective_;
    std::vector<Constraint> constraints_;
    double objective_offset_ = 0.0;
};

} // namespace beamcast::conic

#endif
