#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "storyreel/dataset.hpp"
#include "storyreel/errors.hpp"
#include "storyreel/evaluation.hpp"
#include "storyreel/storyboard.hpp"
#include "storyreel/util.hpp"

namespace py = pybind11;
using namespace storyreel;

PYBIND11_MODULE(_storyreel, m) {
  m.doc() = "Python bindings for the storyreel pipeline core";

  py::register_exception<Error>(m, "StoryreelError");

  m.def("sample_keyframes", &sample_keyframes, py::arg("frame_count"),
        py::arg("duration_s"),
        "Uniform keyframe indices for a clip (8-12 frames, duration-driven).");

  m.def("aggregate", &aggregate, py::arg("scores"),
        "Mean of judge scores, rounded half-up at two decimals.");

  m.def(
      "extract_structured",
      [](const std::string& raw) { return extract_structured(raw).dump(); },
      py::arg("raw"),
      "First balanced JSON object in model output, returned re-serialized.");

  m.def(
      "validate_storyboard",
      [](const std::string& text) { return validate(deserialize(text)); },
      py::arg("storyboard_json"),
      "Invariant violations for a serialized storyboard; empty means valid.");

  m.def(
      "storyboard_roundtrip",
      [](const std::string& text) { return serialize(deserialize(text)); },
      py::arg("storyboard_json"),
      "Canonical re-serialization of a storyboard document.");

  m.def("hits_stoplist", &hits_stoplist, py::arg("text"), py::arg("stoplist"),
        "Whole-word stoplist check used on ordinary captions.");

  m.def("default_stoplist", [] { return DatasetConfig{}.stoplist; });

  m.def("criteria", [] {
    std::vector<std::string> names;
    for (Criterion c : kAllCriteria) names.emplace_back(to_string(c));
    return names;
  });

  m.def(
      "gen_questionnaire",
      [](const std::vector<std::string>& methods,
         const std::vector<std::string>& cases, unsigned seed,
         const std::string& template_dir) {
        auto q = gen_questionnaire(methods, cases, seed, template_dir);
        return py::make_tuple(q.document, q.key_json);
      },
      py::arg("methods"), py::arg("cases"), py::arg("seed"),
      py::arg("template_dir"),
      "Blinded user-study questionnaire plus its unblinding key.");

  m.def("sha256_hex", &util::sha256_hex, py::arg("data"));
}
