#pragma once

// The ten acceptance criteria as verification checks, grouped into suites
// for `lltctl verify`.

#include <cstdint>
#include <string_view>
#include <vector>

#include "llt/diagnostics.hpp"

namespace llt {

enum class Suite { gaussian, localization, llt, discrete, appendix, dp, all };

Suite parse_suite(std::string_view s);
std::string_view suite_name(Suite s);
// Criterion numbers (1..10) run by a suite.
std::vector<int> suite_criteria(Suite s);

inline constexpr int kCriterionCount = 10;

// Runs criterion i (1..10). Errors inside a check become a failing report
// carrying the message in its witnesses.
CheckReport run_criterion(int i, std::uint64_t seed = 0);

CheckReport chi2_rate_check();
CheckReport dual_poincare_check();
CheckReport martingale_suite_check();
CheckReport markov_equivalence_check(std::uint64_t seed);
CheckReport discrete_gibbs_check(std::uint64_t seed);
CheckReport convolution_identity_check();
CheckReport llt_derivative_check();
CheckReport kl_rate_check();
CheckReport quartic_counterexample_check();
CheckReport dp_formula_check(std::uint64_t seed);

}  // namespace llt
