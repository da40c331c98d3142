/*
 * Copyright 2026 The stmv Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#ifndef STMV_SPECIALFN_HPP
#define STMV_SPECIALFN_HPP

namespace stmv::specialfn {

/// Natural log of the gamma function for x > 0 (Lanczos, g = 607/128).
/// Throws std::domain_error for x <= 0.
double log_gamma(double x);

/// Modified Bessel function of the second kind K_nu(x), real order nu >= 0, x > 0.
///
/// Temme's series for x < kBesselSeriesSwitch, Steed's continued fraction
/// (Temme's CF2 form) above it; both yield K_mu and K_{mu+1} for
/// |mu| <= 1/2, followed by forward recurrence up to nu. Saturates to 0
/// when exp(-x) underflows. Negative orders are folded with K_{-nu} = K_nu.
double bessel_k(double nu, double x);

/// Below this argument the Temme series is used. At x = 2 both branches
/// agree to ~1e-15 relative across nu in [0, 5]; the series needs ~20 terms
/// there and the continued fraction ~40.
inline constexpr double kBesselSeriesSwitch = 2.0;

double std_normal_pdf(double x);
double std_normal_cdf(double x);

}  // namespace stmv::specialfn

#endif  // STMV_SPECIALFN_HPP
