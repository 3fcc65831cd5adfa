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

#ifndef BEAMCAST_CONIC_EMBED_HPP
#define BEAMCAST_CONIC_EMBED_HPP

#include <Eigen/Dense>
#include <stdexcept>

namespace beamcast::conic {

/// Relative tolerance for accepting a matrix as Hermitian.
inline constexpr double kHermitianTol = 1e-9;

inline bool is_hermitian(const Eigen::MatrixXcd &H, double tol = kHermitianTol)
{
    if (H.rows() != H.cols())
        return false;
    const double scale = 1.0 + H.cwiseAbs().maxCoeff();
    return (H - H.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

/// Maps a Hermitian matrix H = A + jB to the real symmetric matrix
/// [[A, -B], [B, A]]. The embedded matrix carries the spectrum of H with
/// every eigenvalue doubled in multiplicity, and trace pairings satisfy
/// tr(H1 * H2) = 0.5 * tr(embed(H1) * embed(H2)).
inline Eigen::MatrixXd embed_complex(const Eigen::MatrixXcd &H)
{
    if (!is_hermitian(H))
        throw std::invalid_argument("embed_complex: matrix is not Hermitian");
    const Eigen::Index d = H.rows();
    Eigen::MatrixXd S(2 * d, 2 * d);
    S.topLeftCorner(d, d) = H.real();
    S.topRightCorner(d, d) = -H.imag();
    S.bottomLeftCorner(d, d) = H.imag();
    S.bottomRightCorner(d, d) = H.real();
    // symmetrize away roundoff from the Hermitian input
    return 0.5 * (S + S.transpose());
}

/// Inverse of the embedding for solver outputs: a generic real symmetric
/// PSD S decodes to the Hermitian PSD X = (S11 + S22)/2 + j(S21 - S12)/2,
/// which reproduces every trace pairing tr(H X) = 0.5 * tr(embed(H) S).
inline Eigen::MatrixXcd decode_embedded(const Eigen::MatrixXd &S)
{
    if (S.rows() != S.cols() || S.rows() % 2 != 0)
        throw std::invalid_argument("decode_embedded: size must be even and square");
    const Eigen::Index d = S.rows() / 2;
    Eigen::MatrixXcd X(d, d);
    X.real() = 0.5 * (S.topLeftCorner(d, d) + S.bottomRightCorner(d, d));
    X.imag() = 0.5 * (S.bottomLeftCorner(d, d) - S.topRightCorner(d, d));
    return 0.5 * (X + X.adjoint().eval());
}

} // namespace beamcast::conic

#endif
