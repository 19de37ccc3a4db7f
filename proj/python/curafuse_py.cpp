#include "curafuse/cli.hpp"
#include "curafuse/corpus.hpp"
#include "curafuse/dedup.hpp"
#include "curafuse/eval.hpp"
#include "curafuse/fusion.hpp"
#include "curafuse/image.hpp"
#include "curafuse/io.hpp"
#include "curafuse/trend.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace curafuse;

namespace {

py::object parse_json(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

py::dict fit_dict(const PolyFit& f) {
  py::dict d;
  d["degree"] = f.degree;
  d["coefficients"] = f.coefficients;
  d["rss"] = f.rss;
  d["r2"] = f.r2;
  d["p_value"] = f.p_value;
  d["n"] = f.n;
  return d;
}

}  // namespace

PYBIND11_MODULE(curafuse, m) {
  m.doc() = "Multimodal post curation, late fusion and trend analysis";
  m.attr("__version__") = CURAFUSE_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

  m.def("sanitize_text", [](const std::string& s) { return sanitize_text(s); },
        "Drops URLs, @-mentions and #-hashtags and normalizes whitespace.");

  m.def(
      "dhash",
      [](const std::filesystem::path& path) {
        py::gil_scoped_release release;
        return dhash(decode_image(ImageRef{path})).bits;
      },
      py::arg("path"), "64-bit difference hash of an image file (PNG, JPEG or PNM).");
  m.def(
      "hash_similarity", [](std::uint64_t a, std::uint64_t b) { return hash_similarity({a}, {b}); }, py::arg("a"),
      py::arg("b"));

  m.def(
      "dedupe",
      [](const std::filesystem::path& path, double threshold) {
        const LoadResult loaded = load_posts(path);
        const DedupResult r = remove_duplicates(loaded.dataset, threshold);
        py::list kept;
        for (const Post& p : r.dataset.posts) kept.append(p.id);
        return py::make_tuple(kept, parse_json(r.report.to_json()));
      },
      py::arg("path"), py::arg("threshold") = 0.95,
      "Loads a posts JSONL file and returns (kept ids, report dict).");

  m.def(
      "metrics",
      [](const std::vector<int>& preds, const std::vector<int>& truth) {
        return parse_json(metrics(confusion(preds, truth)).to_json());
      },
      py::arg("preds"), py::arg("truth"));

  m.def(
      "softmax", [](const std::vector<double>& logits) { return softmax(std::span<const double>(logits)); },
      py::arg("logits"));

  m.def("relative_abundance", &relative_abundance, py::arg("count"), py::arg("examined"));
  m.def(
      "polyfit",
      [](const std::vector<double>& xs, const std::vector<double>& ys, std::size_t degree) {
        return fit_dict(polyfit(xs, ys, degree));
      },
      py::arg("xs"), py::arg("ys"), py::arg("degree") = 3);
  m.def(
      "sampling_schedule",
      [](int year, unsigned month, std::uint64_t seed) { return sampling_schedule(MonthKey{year, month}, seed); },
      py::arg("year"), py::arg("month"), py::arg("seed"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a curafuse subcommand; returns (exit code, stdout, stderr).");
}
