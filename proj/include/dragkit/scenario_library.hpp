#pragma once

// Named scenario templates and the evaluation suites built from them.
//
// Templates: single_blob, long_range_<k>, distractor_twin_<k>, drift_<k>, plain_<k>.
// Suites: plain, long_range, distractor, drift, default (all four).

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dragkit/scenario.hpp"

namespace dragkit {

/// Unit-norm signature drawn from a standard normal.
std::vector<double> random_signature(std::size_t channels, std::mt19937_64& rng);

/// Builds a template by name. Throws ValidationError for an unknown name.
Scenario make_scenario(std::string_view name);

std::vector<std::string> template_names();
std::vector<std::string> suite_names();

/// Scenarios of a suite, sorted by id. Throws ValidationError for an unknown suite.
std::vector<Scenario> make_suite(std::string_view name);

}  // namespace dragkit
