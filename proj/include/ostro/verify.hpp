#pragma once

#include <map>
#include <string>
#include <vector>

namespace ostro {

struct CheckResult {
    std::string name;
    bool pass = false;
    double metric = 0.0;  // worst observed deviation (check-specific)
    std::string detail;
};

struct VerifyOptions {
    /// Test hook: scale the model's potential gradient by two, which must
    /// make the derivative cross-check and the gradient check fail.
    bool corrupt_dv = false;
    unsigned seed = 20240101;
};

/// Run the invariant suite relevant to a registered model. All thresholds
/// are fixed; a check passes iff its metric is below its threshold.
std::vector<CheckResult> run_verification(const std::string& model,
                                          const std::map<std::string, double>& params,
                                          const VerifyOptions& options = {});

}  // namespace ostro
