#include "aeaudit/datagen.hpp"
#include "aeaudit/error.hpp"
#include "json.hpp"

namespace aeaudit {

using nlohmann::json;

std::string synthetic_spec_to_json(const SyntheticSpec& raw) {
  const SyntheticSpec spec = resolved(raw);
  json comps = json::array();
  for (const auto& c : spec.components) {
    json cov = json::array();
    for (std::size_t i = 0; i < c.covariance.rows(); ++i) cov.push_back(c.covariance.row_vector(i));
    comps.push_back({{"mean", c.mean}, {"covariance", cov}});
  }
  json j = {{"family", to_string(spec.family)},
            {"samples_per_component", spec.samples_per_component},
            {"seed", spec.seed},
            {"components", comps},
            {"noise", spec.noise},
            {"x_lo", spec.x_lo},
            {"x_hi", spec.x_hi},
            {"alpha_lo", spec.alpha_lo},
            {"alpha_hi", spec.alpha_hi}};
  return j.dump(2) + "\n";
}

SyntheticSpec synthetic_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Format, std::string("dataset spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::Format, "dataset spec must be a JSON object");
  SyntheticSpec spec;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "family") spec.family = family_from_string(v.get<std::string>());
      else if (key == "samples_per_component") spec.samples_per_component = v.get<std::size_t>();
      else if (key == "seed") spec.seed = v.get<std::uint64_t>();
      else if (key == "noise") spec.noise = v.get<double>();
      else if (key == "x_lo") spec.x_lo = v.get<double>();
      else if (key == "x_hi") spec.x_hi = v.get<double>();
      else if (key == "alpha_lo") spec.alpha_lo = v.get<double>();
      else if (key == "alpha_hi") spec.alpha_hi = v.get<double>();
      else if (key == "components") {
        for (const auto& c : v) {
          GaussianComponent g;
          g.mean = c.at("mean").get<Vector>();
          std::vector<Vector> rows = c.at("covariance").get<std::vector<Vector>>();
          for (const auto& r : rows) {
            if (r.size() != rows.size()) fail(ErrorKind::InputDomain, "covariance must be square");
          }
          g.covariance = Matrix::from_rows(rows);
          spec.components.push_back(std::move(g));
        }
      } else {
        fail(ErrorKind::Format, "unknown dataset spec key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed dataset spec: ") + e.what());
  }
  return spec;
}

}  // namespace aeaudit
