#pragma once

#include <map>
#include <memory>

#include "ostro/integrate.hpp"

namespace ostro {

/// A named model resolved from the registry: the integrable system, the
/// constraint set used for projected runs, and (when the model is defined
/// through a variable transformation) the underlying spec.
struct BuiltModel {
    std::string name;
    int dim_k = 0;
    std::map<std::string, double> params;
    std::shared_ptr<const ModelSpec> spec;  // null for models without one
    System system;
    ConstraintChain constraints;
};

struct ModelInfo {
    std::string name;
    std::string summary;
    std::map<std::string, double> defaults;
};

const std::vector<ModelInfo>& list_models();

/// Resolve a model by name, folding the given parameters over the defaults.
/// Throws Error for unknown model names or parameter keys.
BuiltModel build_model(const std::string& name,
                       const std::map<std::string, double>& params = {});

}  // namespace ostro
