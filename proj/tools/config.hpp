#ifndef STORM_TOOLS_CONFIG_HPP
#define STORM_TOOLS_CONFIG_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "storm/field.hpp"
#include "storm/noise.hpp"

namespace storm::cli {

using nlohmann::json;

// invalid config; message carries the JSON-pointer path of the offender
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// rejects unknown keys and missing required keys
void check_keys(const json& obj, const std::string& ptr,
                const std::vector<std::string>& required,
                const std::vector<std::string>& optional);

double get_num(const json& obj, const std::string& ptr, const std::string& key);
int get_int(const json& obj, const std::string& ptr, const std::string& key);
std::string get_str(const json& obj, const std::string& ptr, const std::string& key);

// {"type":"cutoff","n_cut":8,"normalize":true} or {"type":"mollified","h":0.2},
// optional "amplitude_scale"
NoiseSpec parse_family(const json& j, int dim, int modes, const std::string& ptr);

// {"coeffs":[{"k":[1,0],"re":0.7,"im":0.0}, ...]}
SpectralField parse_trig_field(const json& j, int dim, int modes,
                               const std::string& ptr);

struct InitialSpec {
  bool white_noise = false;
  int wn_kmax = 0;
  json trig;  // stored for replica-independent construction
};

InitialSpec parse_initial(const json& j, const std::string& ptr);
SpectralField build_initial(const InitialSpec& init, int dim, int modes,
                            std::uint64_t seed);

}  // namespace storm::cli

#endif
