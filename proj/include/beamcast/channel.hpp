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

#ifndef BEAMCAST_CHANNEL_HPP
#define BEAMCAST_CHANNEL_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace beamcast {

/// Uniform linear array at the base station.
struct ArrayGeometry {
    int num_antennas = 1;       // N
    double spacing_ratio = 0.5; // element spacing d over wavelength

    void validate() const
    {
        if (num_antennas < 1)
            throw std::invalid_argument("ArrayGeometry: num_antennas must be >= 1");
        if (!(spacing_ratio > 0.0))
            throw std::invalid_argument("ArrayGeometry: spacing_ratio must be > 0");
    }
};

/// One propagation path: complex gain and angle of departure in [0, 2*pi).
struct PathParams {
    std::complex<double> gain;
    double aod = 0.0;
};

inline double normalize_angle(double a)
{
    const double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    return a < 0.0 ? a + two_pi : a;
}

/// Unit-norm array response of the ULA toward angle-of-departure aod;
/// entry n is exp(j * n * 2*pi * spacing_ratio * sin(aod)) / sqrt(N).
inline Eigen::VectorXcd ula_response(double aod, const ArrayGeometry &geometry)
{
    geometry.validate();
    const int n = geometry.num_antennas;
    const double step = 2.0 * std::numbers::pi * geometry.spacing_ratio * std::sin(aod);
    Eigen::VectorXcd a(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i)
        a[i] = std::polar(scale, step * static_cast<double>(i));
    return a;
}

/// Per-user channel vectors together with the path parameters that
/// generated them; immutable after construction.
struct ChannelRealization {
    std::vector<Eigen::VectorXcd> channels;      // h_m, length N each
    std::vector<std::vector<PathParams>> paths;  // per user, L entries
    ArrayGeometry geometry;

    int num_users() const { return static_cast<int>(channels.size()); }
};

/// Assembles h = sqrt(N/L) * sum_l gain_l * a(aod_l) from path parameters.
inline Eigen::VectorXcd channel_from_paths(const std::vector<PathParams> &paths,
                                           const ArrayGeometry &geometry)
{
    if (paths.empty())
        throw std::invalid_argument("channel_from_paths: need at least one path");
    const double scale = std::sqrt(static_cast<double>(geometry.num_antennas) /
                                   static_cast<double>(paths.size()));
    Eigen::VectorXcd h = Eigen::VectorXcd::Zero(geometry.num_antennas);
    for (const auto &p : paths)
        h += p.gain * ula_response(p.aod, geometry);
    return scale * h;
}

/// Draws a geometric finite-scattering realization: per user, num_paths
/// i.i.d. paths with aod ~ Uniform(0, 2*pi) and gain ~ CN(0, 1).
/// Deterministic given the seed.
inline ChannelRealization sample_channel(std::uint64_t rng_seed, int num_users,
                                         int num_paths, const ArrayGeometry &geometry)
{
    geometry.validate();
    if (num_users < 1)
        throw std::invalid_argument("sample_channel: num_users must be >= 1");
    if (num_paths < 1)
        throw std::invalid_argument("sample_channel: num_paths must be >= 1");

    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double irt2 = 1.0 / std::sqrt(2.0);

    ChannelRealization out;
    out.geometry = geometry;
    out.paths.resize(static_cast<std::size_t>(num_users));
    out.channels.resize(static_cast<std::size_t>(num_users));
    for (int m = 0; m < num_users; ++m) {
        auto &user_paths = out.paths[static_cast<std::size_t>(m)];
        user_paths.reserve(static_cast<std::size_t>(num_paths));
        for (int l = 0; l < num_paths; ++l) {
            const double aod = normalize_angle(uni(rng));
            const double re = gauss(rng);
            const double im = gauss(rng);
            user_paths.push_back({std::complex<double>(re * irt2, im * irt2), aod});
        }
        out.channels[static_cast<std::size_t>(m)] = channel_from_paths(user_paths, geometry);
    }
    return out;
}

/// Partition of the M users into G disjoint multicast groups plus the
/// per-scenario power budget, noise variance and RF chain count.
struct GroupConfig {
    int num_groups = 1;          // G
    std::vector<int> membership; // user index -> group index in [0, G)
    double power = 1.0;          // P, linear scale
    double noise_var = 1.0;      // sigma_n^2
    int num_rf_chains = 1;       // N_RF, equals num_groups

    void validate() const
    {
        if (num_groups < 1)
            throw std::invalid_argument("GroupConfig: num_groups must be >= 1");
        if (num_rf_chains != num_groups)
            throw std::invalid_argument("GroupConfig: one RF chain per group is required");
        if (membership.empty())
            throw std::invalid_argument("GroupConfig: membership must cover at least one user");
        std::vector<int> count(static_cast<std::size_t>(num_groups), 0);
        for (int g : membership) {
            if (g < 0 || g >= num_groups)
                throw std::invalid_argument("GroupConfig: membership index out of range");
            ++count[static_cast<std::size_t>(g)];
        }
        for (int c : count)
            if (c == 0)
                throw std::invalid_argument("GroupConfig: every group must be nonempty");
        if (!(power > 0.0))
            throw std::invalid_argument("GroupConfig: power must be > 0");
        if (!(noise_var > 0.0))
            throw std::invalid_argument("GroupConfig: noise_var must be > 0");
    }

    int num_users() const { return static_cast<int>(membership.size()); }

    std::vector<std::vector<int>> groups() const
    {
        std::vector<std::vector<int>> g(static_cast<std::size_t>(num_groups));
        for (std::size_t m = 0; m < membership.size(); ++m)
            g[static_cast<std::size_t>(membership[m])].push_back(static_cast<int>(m));
        return g;
    }
};

/// Analog phase-shifter precoder F (N x N_RF, unit-modulus entries) and
/// digital baseband precoder W (N_RF x G).
struct HybridPrecoder {
    Eigen::MatrixXcd analog;  // F
    Eigen::MatrixXcd digital; // W

    Eigen::MatrixXcd composite() const { return analog * digital; }

    /// Checks the constant-modulus entries and the power budget; used by the
    /// hybrid design path (the fully-digital baseline has an identity-role
    /// analog stage instead).
    void validate_hybrid(double power_budget, double unit_tol = 1e-9,
                         double power_tol = 1e-6) const
    {
        for (Eigen::Index j = 0; j < analog.cols(); ++j)
            for (Eigen::Index i = 0; i < analog.rows(); ++i)
                if (std::abs(std::abs(analog(i, j)) - 1.0) > unit_tol)
                    throw std::invalid_argument(
                        "HybridPrecoder: analog entries must be unit-modulus");
        if (composite().squaredNorm() > power_budget * (1.0 + power_tol))
            throw std::invalid_argument("HybridPrecoder: power budget exceeded");
    }
};

/// SINR of every user under the given precoder pair, Eq.-level evaluation:
/// own-beam power over (other-beam powers + noise).
inline Eigen::VectorXd sinr_per_user(const ChannelRealization &channels,
                                     const HybridPrecoder &precoder,
                                     const GroupConfig &config)
{
    config.validate();
    const int num_users = channels.num_users();
    if (num_users != config.num_users())
        throw std::invalid_argument("sinr_per_user: channel/config user count mismatch");
    if (precoder.analog.cols() != precoder.digital.rows())
        throw std::invalid_argument("sinr_per_user: analog/digital dimension mismatch");
    if (precoder.digital.cols() != config.num_groups)
        throw std::invalid_argument("sinr_per_user: digital precoder must have G columns");
    for (const auto &h : channels.channels)
        if (h.size() != precoder.analog.rows())
            throw std::invalid_argument("sinr_per_user: channel/analog dimension mismatch");

    const Eigen::MatrixXcd fw = precoder.composite(); // N x G
    Eigen::VectorXd sinr(num_users);
    for (int m = 0; m < num_users; ++m) {
        const int k = config.membership[static_cast<std::size_t>(m)];
        const Eigen::RowVectorXcd gains =
            channels.channels[static_cast<std::size_t>(m)].adjoint() * fw;
        double interference = 0.0;
        for (int i = 0; i < config.num_groups; ++i)
            if (i != k)
                interference += std::norm(gains[i]);
        sinr[m] = std::norm(gains[k]) / (interference + config.noise_var);
    }
    return sinr;
}

/// Instantaneous per-user rate log2(1 + SINR) in bits/s/Hz.
inline Eigen::VectorXd rate_per_user(const Eigen::VectorXd &sinr)
{
    Eigen::VectorXd rate(sinr.size());
    for (Eigen::Index i = 0; i < sinr.size(); ++i) {
        if (sinr[i] < 0.0)
            throw std::domain_error("rate_per_user: SINR must be nonnegative");
        rate[i] = std::log2(1.0 + sinr[i]);
    }
    return rate;
}

} // namespace beamcast

#endif
