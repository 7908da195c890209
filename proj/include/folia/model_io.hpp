#pragma once

#include <optional>
#include <string>

#include "folia/clifford.hpp"
#include "folia/frame_model.hpp"
#include "folia/grid_cache.hpp"

// JSON model files. Two kinds:
//   kind "frame": constant-frame Lie model given by its nonzero brackets
//     (triples [a, b, k] with a rational coefficient string; the
//     antisymmetric partner is implied), plus an optional transverse split.
//   kind "torus": coordinate foliated torus whose metric blocks are trig
//     polynomials ("identity" or a list of upper-triangular entries), plus
//     an optional fiber functor (exterior / symmetric power summands).
// Loading runs the same constructors the library uses, so malformed files
// fail with the construction diagnostics (e.g. the offending Jacobi triple).

namespace folia {

struct TransverseSplit {
  std::vector<int> first;
  std::vector<int> second;
};

struct ModelFile {
  std::string kind;  // "frame" or "torus"
  std::optional<LieFrameModel> frame;
  std::optional<TransverseSplit> split;  // frame kind only
  std::optional<CoordFoliatedTorus> torus;
  PhiBundleSpec phi = PhiBundleSpec::trivial();  // torus kind only
};

ModelFile parse_model_json(const std::string& text);
ModelFile load_model_file(const std::string& path);
std::string model_file_to_json(const ModelFile& m);
void save_model_file(const ModelFile& m, const std::string& path);

}  // namespace folia
