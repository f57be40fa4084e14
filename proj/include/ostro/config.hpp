#pragma once

#include <map>
#include <string>

namespace ostro {

/// Flat key-value run configuration. File format: one `key = value` pair per
/// line, `#` comments and blank lines ignored. Command-line flags override
/// file values.
struct RunConfig {
    std::string model = "oscillator";
    std::map<std::string, double> params;  // model parameters (m, h1..h3, lambda, c, k)
    double dt = 1e-3;
    long steps = 1000;
    std::string mode = "free";  // free | projected
    int projection_every = 1;
    std::string output;
    std::string format = "csv";  // csv | json
    unsigned seed = 0;
};

/// Parse a key-value file. Throws Error on I/O failure or malformed lines.
std::map<std::string, std::string> read_key_value_file(const std::string& path);

/// Fold a parsed key-value map into a RunConfig. Recognized run keys:
/// model, dt, steps, mode, projection_every, output, format, seed; every
/// other key is treated as a model parameter. Throws Error on non-numeric
/// values.
void apply_config(RunConfig& config, const std::map<std::string, std::string>& kv);

}  // namespace ostro
