#ifndef FPOL_CONFIG_HPP
#define FPOL_CONFIG_HPP

#include "fpol/medium.hpp"

#include <optional>
#include <string>

namespace fpol {

// Raised on config parse or validation failure; message carries the line
// number and the offending key.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& message) : std::runtime_error(message) {}
};

// Full run configuration parsed from the sectioned key = value text format.
// Sections: [cavity], [drive], [medium], [coupling], [sweep], [output].
// Booleans are "true"/"false"; all frequencies are in units of E_r.
struct RunConfig {
    SystemSpec spec;                       // lambda filled only when given directly
    std::optional<double> lambda;          // [coupling] lambda
    std::optional<double> lambda_ratio_sq; // [coupling] lambda_ratio_sq

    // [sweep]
    double omega_min = 0.0;
    double omega_max = 1.0;
    int omega_points = 400;
    std::string axis = "lambda_ratio_sq";
    double axis_min = 0.0;
    double axis_max = 1.0;
    int axis_points = 200;
    double bm_min = 0.0;
    double bm_max = 4.0;
    int bm_points = 17;
    double eps_min = 0.0;
    double eps_max = 0.4;
    int eps_points = 40;
    double window_min = 0.0;
    double window_max = 1.0;
    double ratio_min = 0.05;
    double ratio_max = 0.95;
    int coarse_points = 41;
    int entry = 0;
    double omega_eval = 0.0;

    // [output]
    std::string prefix = "run";

    // Canonical serialization with all defaults applied; written to the
    // resolved-config sidecar and hashed into every output header.
    std::string resolved_text() const;
    std::string config_hash() const;
};

// Parses and validates a config file. Unknown keys or sections are errors;
// messages carry line numbers and key names.
RunConfig parse_config(const std::string& path);

// Parses config text (used by parse_config and the tests).
RunConfig parse_config_text(const std::string& text, const std::string& origin);

} // namespace fpol

#endif
