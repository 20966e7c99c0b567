/* Copyright 2026 The ntk Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef NTK_FIM_HPP
#define NTK_FIM_HPP

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ntk/errors.hpp"
#include "ntk/mat.hpp"
#include "ntk/ntk_explicit.hpp"

// Fisher-information duality: the n x n kernel J^T J and the p x p dual
// J J^T share their nonzero eigenvalues, so a kernel spectrum plus the
// parameter count determines the full FIM spectrum without materializing the
// p x p matrix. Only first derivatives are involved; the Hessian itself (FIM
// plus a residual term that vanishes at zero training loss) is out of scope.

namespace ntk {

/// Nonzero spectrum of a kernel/FIM pair with zero-count bookkeeping.
/// zero_count counts the padding zeros of whichever view was requested:
/// n - |nonzero| for the kernel view, p - |nonzero| for the FIM view.
struct SpectrumReport {
  std::vector<double> nonzero_eigs;  // descending, all > threshold
  std::size_t zero_count = 0;
  std::size_t param_count = 0;  // p; 0 when the kernel view was requested
  std::size_t datapoint_count = 0;
  double threshold = 0.0;  // the resolved threshold actually applied
};

/// Negative threshold = auto: 1e-10 times the largest eigenvalue. Relative
/// rather than absolute because spectra span orders of magnitude per layer.
inline constexpr double kAutoThreshold = -1.0;

namespace detail {

inline SpectrumReport spectrum_impl(const Mat& k, double threshold, std::size_t param_count,
                                    bool fim_view) {
  if (k.rows() != k.cols()) {
    throw ShapeMismatch("spectrum: matrix is " + std::to_string(k.rows()) + "x" +
                        std::to_string(k.cols()));
  }
  const double sym_tol = 1e-9 * (1.0 + max_abs(k));
  const std::vector<double> eigs = sym_eigvals(k, sym_tol);

  double resolved = threshold;
  if (threshold < 0.0) {
    const double largest = eigs.empty() ? 0.0 : std::max(eigs.front(), 0.0);
    resolved = 1e-10 * largest;
  }

  SpectrumReport report;
  report.threshold = resolved;
  report.datapoint_count = k.rows();
  report.param_count = param_count;
  for (const double e : eigs)
    if (e > resolved) report.nonzero_eigs.push_back(e);

  const std::size_t dim = fim_view ? param_count : k.rows();
  report.zero_count =
      dim > report.nonzero_eigs.size() ? dim - report.nonzero_eigs.size() : 0;
  return report;
}

}  // namespace detail

/// Kernel-view spectrum: zero_count = n - |nonzero|.
inline SpectrumReport ntk_spectrum(const Mat& k, double threshold) {
  return detail::spectrum_impl(k, threshold, 0, /*fim_view=*/false);
}

/// FIM-view spectrum: the same nonzero eigenvalues padded to the parameter
/// count, zero_count = p - |nonzero|.
inline SpectrumReport ntk_spectrum(const Mat& k, double threshold, std::size_t param_count) {
  return detail::spectrum_impl(k, threshold, param_count, /*fim_view=*/true);
}

/// Per-component FIM spectra. param_counts must cover every component name.
inline std::vector<std::pair<std::string, SpectrumReport>> layerwise_fim_spectra(
    const NTKComponents& components, const std::map<std::string, std::size_t>& param_counts,
    double threshold) {
  std::vector<std::pair<std::string, SpectrumReport>> out;
  out.reserve(components.size());
  for (const auto& [name, k] : components.items) {
    const auto it = param_counts.find(name);
    if (it == param_counts.end()) {
      throw MissingParamCount("no parameter count for component '" + name + "'");
    }
    out.emplace_back(name, ntk_spectrum(k, threshold, it->second));
  }
  return out;
}

}  // namespace ntk

#endif  // NTK_FIM_HPP
