#include "config.hpp"

#include <algorithm>
#include <cmath>

#include "storm/rng.hpp"

namespace storm::cli {

void check_keys(const json& obj, const std::string& ptr,
                const std::vector<std::string>& required,
                const std::vector<std::string>& optional) {
  if (!obj.is_object()) throw ConfigError(ptr + ": expected an object");
  for (const auto& k : required)
    if (!obj.contains(k)) throw ConfigError(ptr + ": missing required key '" + k + "'");
  for (const auto& [k, v] : obj.items()) {
    if (std::find(required.begin(), required.end(), k) != required.end()) continue;
    if (std::find(optional.begin(), optional.end(), k) != optional.end()) continue;
    throw ConfigError(ptr + "/" + k + ": unknown key");
  }
}

double get_num(const json& obj, const std::string& ptr, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(ptr + ": missing required key '" + key + "'");
  if (!obj[key].is_number()) throw ConfigError(ptr + "/" + key + ": expected a number");
  return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& ptr, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(ptr + ": missing required key '" + key + "'");
  if (!obj[key].is_number_integer())
    throw ConfigError(ptr + "/" + key + ": expected an integer");
  return obj[key].get<int>();
}

std::string get_str(const json& obj, const std::string& ptr, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(ptr + ": missing required key '" + key + "'");
  if (!obj[key].is_string()) throw ConfigError(ptr + "/" + key + ": expected a string");
  return obj[key].get<std::string>();
}

NoiseSpec parse_family(const json& j, int dim, int modes, const std::string& ptr) {
  const std::string type = get_str(j, ptr, "type");
  NoiseSpec spec;
  if (type == "cutoff") {
    check_keys(j, ptr, {"type", "n_cut"}, {"normalize", "amplitude_scale"});
    spec = cutoff_family(dim, get_int(j, ptr, "n_cut"), j.value("normalize", true), modes);
  } else if (type == "mollified") {
    check_keys(j, ptr, {"type", "h"}, {"amplitude_scale"});
    spec = mollified_family(dim, get_num(j, ptr, "h"), modes);
  } else {
    throw ConfigError(ptr + "/type: unknown family '" + type + "'");
  }
  if (j.contains("amplitude_scale"))
    spec = scale_amplitude(spec, get_num(j, ptr, "amplitude_scale"));
  return spec;
}

SpectralField parse_trig_field(const json& j, int dim, int modes,
                               const std::string& ptr) {
  check_keys(j, ptr, {"coeffs"}, {});
  SpectralField u(dim, modes);
  const auto& arr = j["coeffs"];
  if (!arr.is_array() || arr.empty())
    throw ConfigError(ptr + "/coeffs: expected a nonempty array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = ptr + "/coeffs/" + std::to_string(i);
    check_keys(arr[i], p, {"k", "re"}, {"im"});
    const auto& kj = arr[i]["k"];
    if (!kj.is_array() || int(kj.size()) != dim)
      throw ConfigError(p + "/k: expected an array of length dim");
    Mode k{0, 0, 0};
    for (int d = 0; d < dim; ++d) k[d] = kj[d].get<int>();
    u.set_coeff(k, cplx{arr[i]["re"].get<double>(), arr[i].value("im", 0.0)});
  }
  return u;
}

InitialSpec parse_initial(const json& j, const std::string& ptr) {
  const std::string type = get_str(j, ptr, "type");
  InitialSpec init;
  if (type == "white-noise") {
    check_keys(j, ptr, {"type", "kmax"}, {});
    init.white_noise = true;
    init.wn_kmax = get_int(j, ptr, "kmax");
  } else if (type == "trig") {
    check_keys(j, ptr, {"type", "coeffs"}, {});
    init.trig = j;
    init.trig.erase("type");
  } else {
    throw ConfigError(ptr + "/type: unknown initial '" + type + "'");
  }
  return init;
}

SpectralField build_initial(const InitialSpec& init, int dim, int modes,
                            std::uint64_t seed) {
  if (init.white_noise) {
    RngStream rng(hash64({seed, 0x696e6974ULL}));  // "init"
    return SpectralField::white_noise(dim, modes, init.wn_kmax, rng);
  }
  return parse_trig_field(init.trig, dim, modes, "/initial");
}

}  // namespace storm::cli
