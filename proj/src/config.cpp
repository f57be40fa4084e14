#include "ostro/config.hpp"

#include <fstream>
#include <sstream>

#include "ostro/types.hpp"

namespace ostro {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error("config: value for '" + key + "' is not a number: " + value);
    }
}

long parse_long(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error("config: value for '" + key + "' is not an integer: " + value);
    }
}

}  // namespace

std::map<std::string, std::string> read_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "config: malformed line " << lineno << " in " << path
               << " (expected key = value)";
            throw Error(os.str());
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw Error("config: empty key in " + path);
        kv[key] = value;
    }
    return kv;
}

void apply_config(RunConfig& config, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        if (key == "model")
            config.model = value;
        else if (key == "dt")
            config.dt = parse_double(key, value);
        else if (key == "steps")
            config.steps = parse_long(key, value);
        else if (key == "mode")
            config.mode = value;
        else if (key == "projection_every")
            config.projection_every = static_cast<int>(parse_long(key, value));
        else if (key == "output")
            config.output = value;
        else if (key == "format")
            config.format = value;
        else if (key == "seed")
            config.seed = static_cast<unsigned>(parse_long(key, value));
        else
            config.params[key] = parse_double(key, value);
    }
}

}  // namespace ostro
