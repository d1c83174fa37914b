#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace fastbcd {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Malformed or truncated instance files, bad CSV payloads.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numerical precondition failed (non-PD block, non-converging power
/// iteration). Distinct from usage errors so the CLI can map exit codes.
struct AssumptionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace fastbcd
