#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "radeval/geometry.hpp"
#include "radeval/metrics.hpp"
#include "radeval/tensor.hpp"

namespace radeval::ingest {

enum class Photometric { Monochrome1, Monochrome2 };

struct DicomImage {
  int rows = 0;
  int cols = 0;
  int bits_allocated = 16;  // 8 or 16
  Photometric photometric = Photometric::Monochrome2;
  std::vector<std::uint16_t> pixels;  // row-major, rows * cols
  std::string body_part;              // empty when the tag is absent
  std::string study_id;
  std::string image_id;
  std::optional<double> window_center;
  std::optional<double> window_width;
};

/// Parses an uncompressed little-endian DICOM file (Part-10 or raw
/// implicit-VR stream) into the fields the pipeline needs.
DicomImage parse_dicom(std::span<const std::uint8_t> bytes);

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

/// MONOCHROME1 is inverted (v' = max - v) first. Then linear windowing when
/// the window tags are present, min-max scaling otherwise; a constant image
/// maps to all zeros.
GrayImage normalize_pixels(const DicomImage& img);

inline constexpr int kModelInputSize = 512;
inline constexpr std::uint8_t kLetterboxFill = 114;

struct ModelInput {
  Tensor tensor;  // (1, 3, 512, 512), values in [0, 1]
  geometry::LetterboxTransform letterbox;
};

/// Letterboxes onto the 512x512 canvas (gray fill 114), replicates the
/// single channel three times, scales to [0, 1] floats.
ModelInput to_model_input(const GrayImage& img);

enum class StudyClass { Negative = 0, Typical = 1, Indeterminate = 2, Atypical = 3 };

const char* study_class_name(StudyClass c);

struct StudyLabel {
  std::string study_id;
  StudyClass label = StudyClass::Negative;
};

/// Loads the study-level label table: comma-separated, header row naming the
/// id column plus the four appearance flags, exactly one flag set per row.
std::vector<StudyLabel> load_study_labels(std::string_view table_text);

/// Per-image ground-truth grouping; negative studies carry an empty list.
struct ImageAnnotation {
  std::string image_id;
  std::string study_id;
  std::vector<metrics::GroundTruthBox> boxes;
};

/// Clamps every box to [0, width) x [0, height); boxes fully outside
/// collapse to zero area at the border.
void clamp_boxes(ImageAnnotation& annotation, int width, int height);

/// Histogram of BodyPartExamined values; images without the tag count under
/// "UNKNOWN".
std::map<std::string, std::size_t> body_part_distribution(const std::vector<DicomImage>& images);

}  // namespace radeval::ingest
