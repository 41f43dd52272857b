#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <sstream>

#include "radeval/error.hpp"
#include "radeval/geometry.hpp"
#include "radeval/ingest.hpp"
#include "radeval/metrics.hpp"
#include "radeval/postprocess.hpp"
#include "radeval/refnet.hpp"
#include "radeval/tensor.hpp"

namespace py = pybind11;

using namespace radeval;

namespace {

Tensor tensor_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 4) throw ContractError("expected a 4-d float32 array");
  Tensor t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
           static_cast<int>(a.shape(2)), static_cast<int>(a.shape(3)));
  std::memcpy(t.data().data(), a.data(), t.size() * sizeof(float));
  return t;
}

py::array_t<float> tensor_to_array(const Tensor& t) {
  py::array_t<float> a({t.n(), t.c(), t.h(), t.w()});
  std::memcpy(a.mutable_data(), t.data().data(), t.size() * sizeof(float));
  return a;
}

}  // namespace

PYBIND11_MODULE(_radeval, m) {
  m.doc() = "Chest-radiograph detection evaluation toolkit (C++ core)";

  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<MalformedAnnotationError>(m, "MalformedAnnotationError",
                                                   PyExc_ValueError);
  py::register_exception<MalformedFileError>(m, "MalformedFileError", PyExc_ValueError);
  py::register_exception<UnsupportedSyntaxError>(m, "UnsupportedSyntaxError", PyExc_ValueError);
  py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", PyExc_ValueError);

  // --- geometry ---
  py::class_<geometry::BBox>(m, "BBox")
      .def(py::init<>())
      .def(py::init([](double x_min, double y_min, double x_max, double y_max) {
             return geometry::BBox{x_min, y_min, x_max, y_max};
           }),
           py::arg("x_min"), py::arg("y_min"), py::arg("x_max"), py::arg("y_max"))
      .def_readwrite("x_min", &geometry::BBox::x_min)
      .def_readwrite("y_min", &geometry::BBox::y_min)
      .def_readwrite("x_max", &geometry::BBox::x_max)
      .def_readwrite("y_max", &geometry::BBox::y_max)
      .def("__repr__", [](const geometry::BBox& b) {
        std::ostringstream s;
        s << "BBox(" << b.x_min << ", " << b.y_min << ", " << b.x_max << ", " << b.y_max << ")";
        return s.str();
      });

  m.def("iou", &geometry::iou, py::arg("a"), py::arg("b"),
        "Intersection over union of two half-open xyxy pixel boxes.");
  m.def("box_area", &geometry::area, py::arg("box"));

  py::enum_<geometry::BoxFormat>(m, "BoxFormat")
      .value("XYXY_PIXEL", geometry::BoxFormat::XyxyPixel)
      .value("XYWH_CENTER_NORMALIZED", geometry::BoxFormat::XywhCenterNormalized);

  m.def("convert_box", &geometry::convert, py::arg("box"), py::arg("from_format"),
        py::arg("to_format"), py::arg("img_w"), py::arg("img_h"),
        "Re-express a 4-tuple box in another coordinate convention.");

  py::class_<geometry::LetterboxTransform>(m, "LetterboxTransform")
      .def_static("fit", &geometry::LetterboxTransform::fit, py::arg("src_width"),
                  py::arg("src_height"), py::arg("dst_width"), py::arg("dst_height"))
      .def_readonly("src_width", &geometry::LetterboxTransform::src_width)
      .def_readonly("src_height", &geometry::LetterboxTransform::src_height)
      .def_readonly("dst_width", &geometry::LetterboxTransform::dst_width)
      .def_readonly("dst_height", &geometry::LetterboxTransform::dst_height)
      .def_readonly("scale", &geometry::LetterboxTransform::scale)
      .def_readonly("pad_left", &geometry::LetterboxTransform::pad_left)
      .def_readonly("pad_top", &geometry::LetterboxTransform::pad_top);

  m.def("letterbox_apply", &geometry::letterbox_apply, py::arg("transform"), py::arg("box"));
  m.def("letterbox_invert", &geometry::letterbox_invert, py::arg("transform"), py::arg("box"));

  // --- metrics ---
  py::class_<metrics::Detection>(m, "Detection")
      .def(py::init([](std::string image_id, int class_id, double score, geometry::BBox box) {
             return metrics::Detection{std::move(image_id), class_id, score, box};
           }),
           py::arg("image_id"), py::arg("class_id"), py::arg("score"), py::arg("box"))
      .def_readwrite("image_id", &metrics::Detection::image_id)
      .def_readwrite("class_id", &metrics::Detection::class_id)
      .def_readwrite("score", &metrics::Detection::score)
      .def_readwrite("box", &metrics::Detection::box);

  py::class_<metrics::GroundTruthBox>(m, "GroundTruthBox")
      .def(py::init([](std::string image_id, int class_id, geometry::BBox box) {
             return metrics::GroundTruthBox{std::move(image_id), class_id, box};
           }),
           py::arg("image_id"), py::arg("class_id"), py::arg("box"))
      .def_readwrite("image_id", &metrics::GroundTruthBox::image_id)
      .def_readwrite("class_id", &metrics::GroundTruthBox::class_id)
      .def_readwrite("box", &metrics::GroundTruthBox::box);

  py::enum_<metrics::MatchFlag>(m, "MatchFlag")
      .value("TP", metrics::MatchFlag::TP)
      .value("FP", metrics::MatchFlag::FP);

  py::class_<metrics::MatchOutcome>(m, "MatchOutcome")
      .def_readonly("detection_index", &metrics::MatchOutcome::detection_index)
      .def_readonly("flag", &metrics::MatchOutcome::flag)
      .def_readonly("ground_truth_index", &metrics::MatchOutcome::ground_truth_index);

  py::class_<metrics::PRPoint>(m, "PRPoint")
      .def_readonly("recall", &metrics::PRPoint::recall)
      .def_readonly("precision", &metrics::PRPoint::precision);

  py::class_<metrics::EvalReport>(m, "EvalReport")
      .def_readonly("per_class_ap", &metrics::EvalReport::per_class_ap)
      .def_readonly("map_score", &metrics::EvalReport::map_score)
      .def_readonly("iou_threshold", &metrics::EvalReport::iou_threshold)
      .def_readonly("n_detections", &metrics::EvalReport::n_detections)
      .def_readonly("n_ground_truth", &metrics::EvalReport::n_ground_truth);

  m.def("match_detections", &metrics::match_detections, py::arg("detections"),
        py::arg("ground_truth"), py::arg("iou_threshold"));
  m.def("pr_curve", &metrics::pr_curve, py::arg("outcomes"), py::arg("n_ground_truth"));
  m.def("average_precision", &metrics::average_precision, py::arg("curve"));
  m.def("mean_average_precision", &metrics::mean_average_precision, py::arg("per_class_ap"));
  m.def("evaluate", &metrics::evaluate, py::arg("detections"), py::arg("ground_truth"),
        py::arg("iou_threshold") = 0.5);
  m.def(
      "confusion_matrix",
      [](const std::vector<int>& predicted, const std::vector<int>& truth) {
        const auto mtx = metrics::confusion_matrix(predicted, truth);
        py::array_t<std::int64_t> out({metrics::kNumStudyClasses, metrics::kNumStudyClasses});
        auto view = out.mutable_unchecked<2>();
        for (int t = 0; t < metrics::kNumStudyClasses; ++t) {
          for (int p = 0; p < metrics::kNumStudyClasses; ++p) {
            view(t, p) = mtx[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
          }
        }
        return out;
      },
      py::arg("predicted"), py::arg("truth"),
      "4x4 matrix; entry (t, p) counts truth class t predicted as p.");
  m.def(
      "precision_recall_from_confusion",
      [](const py::array_t<std::int64_t>& matrix) {
        if (matrix.ndim() != 2 || matrix.shape(0) != metrics::kNumStudyClasses ||
            matrix.shape(1) != metrics::kNumStudyClasses) {
          throw ContractError("expected a 4x4 matrix");
        }
        metrics::ConfusionMatrix mtx{};
        auto view = matrix.unchecked<2>();
        for (int t = 0; t < metrics::kNumStudyClasses; ++t) {
          for (int p = 0; p < metrics::kNumStudyClasses; ++p) {
            if (view(t, p) < 0) throw ContractError("confusion counts must be non-negative");
            mtx[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] = view(t, p);
          }
        }
        py::list out;
        for (const auto& pr : metrics::precision_recall_from_confusion(mtx)) {
          out.append(py::make_tuple(pr.precision ? py::cast(*pr.precision) : py::none(),
                                    pr.recall ? py::cast(*pr.recall) : py::none()));
        }
        return out;
      },
      py::arg("matrix"),
      "Per-class (precision, recall); None where the denominator is zero.");

  // --- postprocess ---
  py::class_<postprocess::AnchorLevel>(m, "AnchorLevel")
      .def(py::init([](int stride, const std::vector<std::array<float, 2>>& anchors) {
             return postprocess::AnchorLevel{stride, anchors};
           }),
           py::arg("stride"), py::arg("anchors"))
      .def_readwrite("stride", &postprocess::AnchorLevel::stride)
      .def_readwrite("anchors", &postprocess::AnchorLevel::anchors);

  m.def(
      "decode_head",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& grid,
         const postprocess::AnchorLevel& level, double conf_threshold,
         const std::string& image_id) {
        postprocess::HeadGrid head{tensor_from_array(grid)};
        return postprocess::decode_head(head, level, conf_threshold, image_id);
      },
      py::arg("grid"), py::arg("level"), py::arg("conf_threshold"), py::arg("image_id") = "",
      "Decode one (anchors, grid_y, grid_x, 5+classes) head grid.");
  m.def("nms", &postprocess::nms, py::arg("detections"), py::arg("iou_threshold"));

  // --- ingest ---
  py::enum_<ingest::Photometric>(m, "Photometric")
      .value("MONOCHROME1", ingest::Photometric::Monochrome1)
      .value("MONOCHROME2", ingest::Photometric::Monochrome2);

  py::class_<ingest::DicomImage>(m, "DicomImage")
      .def_readonly("rows", &ingest::DicomImage::rows)
      .def_readonly("cols", &ingest::DicomImage::cols)
      .def_readonly("bits_allocated", &ingest::DicomImage::bits_allocated)
      .def_readonly("photometric", &ingest::DicomImage::photometric)
      .def_readonly("pixels", &ingest::DicomImage::pixels)
      .def_readonly("body_part", &ingest::DicomImage::body_part)
      .def_readonly("study_id", &ingest::DicomImage::study_id)
      .def_readonly("image_id", &ingest::DicomImage::image_id);

  m.def(
      "parse_dicom",
      [](const py::bytes& data) {
        const std::string_view view = data;
        return ingest::parse_dicom(std::span<const std::uint8_t>(
            reinterpret_cast<const std::uint8_t*>(view.data()), view.size()));
      },
      py::arg("data"), "Parse an uncompressed little-endian DICOM byte string.");

  py::class_<ingest::GrayImage>(m, "GrayImage")
      .def_readonly("width", &ingest::GrayImage::width)
      .def_readonly("height", &ingest::GrayImage::height)
      .def_property_readonly("pixels", [](const ingest::GrayImage& img) {
        py::array_t<std::uint8_t> out({img.height, img.width});
        std::memcpy(out.mutable_data(), img.pixels.data(), img.pixels.size());
        return out;
      });

  m.def("normalize_pixels", &ingest::normalize_pixels, py::arg("image"));

  m.def(
      "to_model_input",
      [](const ingest::GrayImage& img) {
        auto result = ingest::to_model_input(img);
        return py::make_tuple(tensor_to_array(result.tensor), result.letterbox);
      },
      py::arg("image"),
      "Returns (tensor of shape (1, 3, 512, 512), LetterboxTransform).");

  py::enum_<ingest::StudyClass>(m, "StudyClass")
      .value("NEGATIVE", ingest::StudyClass::Negative)
      .value("TYPICAL", ingest::StudyClass::Typical)
      .value("INDETERMINATE", ingest::StudyClass::Indeterminate)
      .value("ATYPICAL", ingest::StudyClass::Atypical);

  py::class_<ingest::StudyLabel>(m, "StudyLabel")
      .def_readonly("study_id", &ingest::StudyLabel::study_id)
      .def_readonly("label", &ingest::StudyLabel::label);

  m.def("load_study_labels", &ingest::load_study_labels, py::arg("table_text"));

  // --- refnet ---
  m.def(
      "run_block_invariants",
      [](std::uint64_t seed, int base_width, const std::array<int, 4>& input) {
        refnet::InvariantConfig config;
        config.input = input;
        config.backbone.base_width = base_width;
        py::list out;
        for (const auto& r : refnet::run_invariant_suite(config, seed)) {
          out.append(py::make_tuple(r.name, r.passed, r.message));
        }
        return out;
      },
      py::arg("seed") = 0, py::arg("base_width") = 8,
      py::arg("input") = std::array<int, 4>{1, 3, 64, 64},
      "Run the structural invariant suite; returns (name, passed, message) triples.");

  m.def(
      "backbone_forward",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& image,
         std::uint64_t seed, int base_width) {
        refnet::BackboneConfig config;
        config.base_width = base_width;
        const auto params = refnet::random_backbone_params(config, seed);
        const auto feats = refnet::backbone_forward(tensor_from_array(image), params);
        return py::make_tuple(tensor_to_array(feats.p3), tensor_to_array(feats.p4),
                              tensor_to_array(feats.p5));
      },
      py::arg("image"), py::arg("seed") = 0, py::arg("base_width") = 8,
      "Forward the seeded reference backbone; returns (P3, P4, P5).");
}
