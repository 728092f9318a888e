#include "ulrates/potentials.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "json.hpp"

namespace ulrates {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw invalid_parameter_error(msg);
}

std::map<std::string, std::function<PotentialSpec(int)>>& registry() {
  static std::map<std::string, std::function<PotentialSpec(int)>> r;
  return r;
}
std::mutex registry_mutex;

}  // namespace

PotentialSpec make_isotropic_quadratic(double m, int d) {
  require(m > 0.0 && std::isfinite(m), "quadratic potential needs m > 0");
  require(d >= 1, "quadratic potential needs dimension >= 1");
  PotentialSpec spec;
  spec.dimension = d;
  spec.energy = [m](const Eigen::VectorXd& x) {
    return 0.5 * m * x.squaredNorm();
  };
  spec.gradient = [m](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return m * x;
  };
  spec.poincare_m = m;
  spec.hessian_lower_K = 0.0;
  // hess U = m * Id everywhere, so any M >= 1 works; record the smallest.
  spec.growth_M = std::max(1.0, m);
  spec.class_tag = PotentialSpec::Class::Convex;
  spec.name = "quadratic";
  return spec;
}

PotentialSpec make_double_well(int d) {
  require(d >= 1, "double well needs dimension >= 1");
  PotentialSpec spec;
  spec.dimension = d;
  spec.energy = [](const Eigen::VectorXd& x) {
    const double s = x.squaredNorm() - 1.0;
    return s * s;
  };
  spec.gradient = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return 4.0 * (x.squaredNorm() - 1.0) * x;
  };
  // hess U = 4(|x|^2-1) Id + 8 x x^T >= -4 Id (worst case at x = 0).
  spec.hessian_lower_K = 4.0;
  // No closed-form Poincare constant or growth constant; left unset.
  spec.class_tag = PotentialSpec::Class::HessianBoundedBelow;
  spec.name = "double_well";
  return spec;
}

RegimeR select_R(const PotentialSpec& spec) {
  // Collect every regime the metadata supports, then keep the smallest R
  // (the rate formula is decreasing in R). Ties prefer the weaker
  // hypothesis in the order Convex < HessianLB < General.
  bool have = false;
  RegimeR best;
  auto consider = [&](double value, RegimeR::Regime regime) {
    if (!have || value < best.value) {
      best.value = value;
      best.regime = regime;
      have = true;
    }
  };

  if (spec.class_tag == PotentialSpec::Class::Convex)
    consider(0.0, RegimeR::Regime::Convex);
  if (spec.hessian_lower_K) {
    require(*spec.hessian_lower_K >= 0.0, "hessian_lower_K must be >= 0");
    consider(std::sqrt(*spec.hessian_lower_K), RegimeR::Regime::HessianLB);
  }
  if (spec.growth_M) {
    require(*spec.growth_M >= 1.0, "growth_M must be >= 1");
    consider(*spec.growth_M * std::sqrt(double(spec.dimension)),
             RegimeR::Regime::General);
  }

  if (!have) {
    // Name the field that would unlock the regime the potential claims.
    const char* field =
        spec.class_tag == PotentialSpec::Class::HessianBoundedBelow
            ? "hessian_lower_K"
            : "growth_M";
    throw missing_metadata_error(field, "select_R(" + spec.name + ")");
  }
  // R = 0 is by definition the convex regime (a zero Hessian bound is
  // convexity).
  if (best.value == 0.0) best.regime = RegimeR::Regime::Convex;
  return best;
}

void register_potential(const std::string& name,
                        std::function<PotentialSpec(int)> factory) {
  std::lock_guard<std::mutex> lock(registry_mutex);
  registry()[name] = std::move(factory);
}

PotentialSpec potential_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw invalid_parameter_error(std::string("potential JSON: ") + e.what());
  }
  require(doc.is_object(), "potential JSON must be an object");

  static const char* allowed[] = {"name", "kind", "m", "d", "K", "M"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed) ok = ok || it.key() == key;
    require(ok, "unknown key '" + it.key() + "' in potential JSON");
  }
  require(doc.contains("kind") && doc["kind"].is_string(),
          "potential JSON needs a string 'kind'");
  const std::string kind = doc["kind"].get<std::string>();
  const int d = doc.value("d", 1);

  PotentialSpec spec;
  if (kind == "quadratic") {
    require(doc.contains("m"), "quadratic potential JSON needs 'm'");
    spec = make_isotropic_quadratic(doc["m"].get<double>(), d);
  } else if (kind == "double_well") {
    spec = make_double_well(d);
  } else if (kind == "custom") {
    require(doc.contains("name") && doc["name"].is_string(),
            "custom potential JSON needs a string 'name'");
    const std::string name = doc["name"].get<std::string>();
    std::function<PotentialSpec(int)> factory;
    {
      std::lock_guard<std::mutex> lock(registry_mutex);
      auto it = registry().find(name);
      require(it != registry().end(),
              "custom potential '" + name + "' is not registered");
      factory = it->second;
    }
    spec = factory(d);
  } else {
    throw invalid_parameter_error("unknown potential kind '" + kind + "'");
  }

  // Metadata overrides from the document, validated against the spec
  // invariants (m > 0, K >= 0, M >= 1).
  if (doc.contains("m")) {
    const double m = doc["m"].get<double>();
    require(m > 0.0, "'m' must be > 0");
    spec.poincare_m = m;
  }
  if (doc.contains("K")) {
    const double K = doc["K"].get<double>();
    require(K >= 0.0, "'K' must be >= 0");
    spec.hessian_lower_K = K;
  }
  if (doc.contains("M")) {
    const double M = doc["M"].get<double>();
    require(M >= 1.0, "'M' must be >= 1");
    spec.growth_M = M;
  }
  if (doc.contains("name") && doc["name"].is_string())
    spec.name = doc["name"].get<std::string>();
  return spec;
}

}  // namespace ulrates
