#pragma once

// Scene files for spencerctl: versioned JSON describing a patch, a structure
// and named fields. Unknown keys are rejected; errors carry the JSON pointer
// of the offending value.

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spencer/brackets.hpp"
#include "spencer/spencer.hpp"

namespace spencerctl {

using json = nlohmann::ordered_json;

class SceneError : public std::runtime_error {
 public:
  SceneError(const std::string& where, const std::string& what)
      : std::runtime_error("scene error at " + (where.empty() ? std::string("/") : where) + ": " + what) {}
};

using ComplexText = std::pair<std::string, std::string>;

struct ChartText {
  std::vector<ComplexText> holo;
  std::vector<ComplexText> complement;
};

struct Scene {
  json raw;
  int dim_half = 1;
  std::vector<std::pair<double, double>> bounds;
  std::vector<int> resolution;
  json structure;
  std::map<std::string, std::string> functions;
  std::map<std::string, ComplexText> complex_functions;
  std::map<std::string, std::vector<ComplexText>> vector_fields;
  std::map<std::string, std::array<std::string, 4>> quaternion_functions;
  std::map<std::string, ChartText> charts;
  std::optional<double> tolerance;
  std::optional<std::string> mode;
  std::optional<std::string> boundary;
  std::optional<std::string> oracle;

  int dim() const { return 2 * dim_half; }
  bool is_hypercomplex() const;
  /// Patch with the scene resolution, or `grid` points on every axis when > 0.
  spencer::PatchPtr patch(int grid = 0) const;
};

Scene parse_scene(const json& j);
Scene load_scene(const std::string& path);

/// Almost-complex structure of the scene (J for hypercomplex scenes).
spencer::AlmostComplexStructure build_structure(const Scene& s, const spencer::PatchPtr& p);
spencer::HypercomplexStructure build_hypercomplex(const Scene& s, const spencer::PatchPtr& p);

spencer::ScalarField real_function(const Scene& s, const spencer::PatchPtr& p, const std::string& name);
/// Complex functions; a real function name is accepted with zero imaginary part.
spencer::ComplexField complex_function(const Scene& s, const spencer::PatchPtr& p, const std::string& name);
spencer::VectorFieldC vector_field(const Scene& s, const spencer::PatchPtr& p, const std::string& name);
spencer::QuaternionFunction quaternion_function(const Scene& s, const spencer::PatchPtr& p, const std::string& name);
spencer::SpencerChart chart(const Scene& s, const spencer::PatchPtr& p, const std::string& name);

}  // namespace spencerctl
