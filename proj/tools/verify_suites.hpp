// SPDX-License-Identifier: Apache-2.0

#ifndef FGRN_VERIFY_SUITES_HPP
#define FGRN_VERIFY_SUITES_HPP

#include <string>
#include <vector>

#include "fgrn/model.hpp"

namespace fgrn {

struct SuiteResult {
    std::string name;
    double max_err = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

/// Property suites behind `fgrn verify`: structural identities, gradient
/// checks, flow invertibility and log-det correctness, metric sanity. When a
/// model is given, its own flow is additionally round-trip checked.
std::vector<SuiteResult> run_verify_suites(int trials, const RescaleModelT<float>* model);

} // namespace fgrn

#endif // FGRN_VERIFY_SUITES_HPP
