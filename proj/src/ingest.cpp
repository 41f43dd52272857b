#include "radeval/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "radeval/dicom.hpp"
#include "radeval/error.hpp"

namespace radeval::ingest {

DicomImage parse_dicom(std::span<const std::uint8_t> bytes) {
  const dicom::DataSet ds = dicom::parse_stream(bytes);

  DicomImage img;
  const auto* rows = dicom::find(ds.elements, dicom::kRows);
  const auto* cols = dicom::find(ds.elements, dicom::kColumns);
  if (rows == nullptr || cols == nullptr) {
    throw MalformedFileError("missing Rows/Columns");
  }
  img.rows = dicom::read_u16(*rows);
  img.cols = dicom::read_u16(*cols);
  if (img.rows <= 0 || img.cols <= 0) {
    throw MalformedFileError("Rows/Columns must be positive");
  }

  const auto* bits = dicom::find(ds.elements, dicom::kBitsAllocated);
  img.bits_allocated = bits != nullptr ? dicom::read_u16(*bits) : 16;
  if (img.bits_allocated != 8 && img.bits_allocated != 16) {
    throw MalformedFileError("BitsAllocated must be 8 or 16, got " +
                             std::to_string(img.bits_allocated));
  }

  if (const auto* photometric = dicom::find(ds.elements, dicom::kPhotometricInterpretation)) {
    const std::string value = dicom::read_string(*photometric);
    if (value == "MONOCHROME1") {
      img.photometric = Photometric::Monochrome1;
    } else if (value == "MONOCHROME2") {
      img.photometric = Photometric::Monochrome2;
    } else {
      throw MalformedFileError("unsupported photometric interpretation '" + value + "'");
    }
  }

  if (const auto* body_part = dicom::find(ds.elements, dicom::kBodyPartExamined)) {
    img.body_part = dicom::read_string(*body_part);
  }
  if (const auto* study = dicom::find(ds.elements, dicom::kStudyInstanceUid)) {
    img.study_id = dicom::read_string(*study);
  }
  if (const auto* sop = dicom::find(ds.elements, dicom::kSopInstanceUid)) {
    img.image_id = dicom::read_string(*sop);
  }
  if (const auto* center = dicom::find(ds.elements, dicom::kWindowCenter)) {
    img.window_center = dicom::read_first_decimal(*center);
  }
  if (const auto* width = dicom::find(ds.elements, dicom::kWindowWidth)) {
    img.window_width = dicom::read_first_decimal(*width);
  }

  const auto* pixel_data = dicom::find(ds.elements, dicom::kPixelData);
  if (pixel_data == nullptr) {
    throw MalformedFileError("missing PixelData");
  }
  const std::size_t count = static_cast<std::size_t>(img.rows) * static_cast<std::size_t>(img.cols);
  const std::size_t bytes_per_pixel = img.bits_allocated == 8 ? 1 : 2;
  const std::size_t needed = count * bytes_per_pixel;
  const std::size_t actual = pixel_data->value.size();
  // DICOM pads odd-length values to even with one trailing byte.
  if (actual != needed && !(needed % 2 == 1 && actual == needed + 1)) {
    throw MalformedFileError("PixelData holds " + std::to_string(actual) + " bytes, expected " +
                             std::to_string(needed));
  }
  img.pixels.resize(count);
  if (bytes_per_pixel == 1) {
    for (std::size_t i = 0; i < count; ++i) img.pixels[i] = pixel_data->value[i];
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      img.pixels[i] = static_cast<std::uint16_t>(pixel_data->value[2 * i]) |
                      static_cast<std::uint16_t>(pixel_data->value[2 * i + 1]) << 8;
    }
  }
  return img;
}

GrayImage normalize_pixels(const DicomImage& img) {
  GrayImage out;
  out.width = img.cols;
  out.height = img.rows;
  out.pixels.resize(img.pixels.size());
  if (img.pixels.empty()) return out;

  const auto [min_it, max_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double vmax = *max_it;

  // Inversion first, so MONOCHROME1 behaves like MONOCHROME2 afterwards.
  auto value_at = [&](std::size_t i) -> double {
    const double v = img.pixels[i];
    return img.photometric == Photometric::Monochrome1 ? vmax - v : v;
  };

  const bool windowed = img.window_center.has_value() && img.window_width.has_value() &&
                        *img.window_width >= 1.0;
  if (windowed) {
    const double c = *img.window_center;
    const double w = *img.window_width;
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
      double y;
      if (w == 1.0) {
        y = value_at(i) < c - 0.5 ? 0.0 : 1.0;
      } else {
        y = (value_at(i) - (c - 0.5)) / (w - 1.0) + 0.5;
        y = std::clamp(y, 0.0, 1.0);
      }
      out.pixels[i] = static_cast<std::uint8_t>(std::min(255.0, std::floor(255.0 * y)));
    }
    return out;
  }

  const double lo = img.photometric == Photometric::Monochrome1 ? vmax - *max_it : *min_it;
  const double hi = img.photometric == Photometric::Monochrome1 ? vmax - *min_it : *max_it;
  if (hi == lo) {
    std::fill(out.pixels.begin(), out.pixels.end(), std::uint8_t{0});
    return out;
  }
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double scaled = std::floor(255.0 * (value_at(i) - lo) / (hi - lo));
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
  }
  return out;
}

ModelInput to_model_input(const GrayImage& img) {
  if (img.width <= 0 || img.height <= 0 ||
      img.pixels.size() != static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height)) {
    throw ContractError("model input requires a non-empty image with width*height pixels");
  }

  ModelInput out;
  out.letterbox =
      geometry::LetterboxTransform::fit(img.width, img.height, kModelInputSize, kModelInputSize);
  const auto& t = out.letterbox;

  const int content_w =
      std::min(kModelInputSize, static_cast<int>(std::lround(t.scale * img.width)));
  const int content_h =
      std::min(kModelInputSize, static_cast<int>(std::lround(t.scale * img.height)));
  const int left = static_cast<int>(t.pad_left);
  const int top = static_cast<int>(t.pad_top);

  auto sample = [&](double sx, double sy) -> double {
    // Bilinear with pixel-center alignment, clamped at the borders.
    sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
    sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(std::floor(sx));
    const int y0 = static_cast<int>(std::floor(sy));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = sx - x0;
    const double fy = sy - y0;
    auto px = [&](int x, int y) -> double {
      return img.pixels[static_cast<std::size_t>(y) * img.width + x];
    };
    return px(x0, y0) * (1 - fx) * (1 - fy) + px(x1, y0) * fx * (1 - fy) +
           px(x0, y1) * (1 - fx) * fy + px(x1, y1) * fx * fy;
  };

  Tensor tensor(1, 3, kModelInputSize, kModelInputSize);
  constexpr float kFill = kLetterboxFill / 255.0f;
  for (int y = 0; y < kModelInputSize; ++y) {
    for (int x = 0; x < kModelInputSize; ++x) {
      float value = kFill;
      if (x >= left && x < left + content_w && y >= top && y < top + content_h) {
        const double sx = (x - left + 0.5) / t.scale - 0.5;
        const double sy = (y - top + 0.5) / t.scale - 0.5;
        value = static_cast<float>(sample(sx, sy) / 255.0);
      }
      for (int c = 0; c < 3; ++c) tensor.at(0, c, y, x) = value;
    }
  }
  out.tensor = std::move(tensor);
  return out;
}

const char* study_class_name(StudyClass c) {
  switch (c) {
    case StudyClass::Negative:
      return "Negative";
    case StudyClass::Typical:
      return "Typical";
    case StudyClass::Indeterminate:
      return "Indeterminate";
    case StudyClass::Atypical:
      return "Atypical";
  }
  return "Negative";
}

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && (s[begin] == ' ' || s[begin] == '\t' || s[begin] == '\r')) ++begin;
  while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '\r')) --end;
  return s.substr(begin, end - begin);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::vector<StudyLabel> load_study_labels(std::string_view table_text) {
  std::istringstream stream{std::string(table_text)};
  std::string line;
  std::size_t line_number = 0;

  if (!std::getline(stream, line)) {
    throw MalformedAnnotationError("empty label table");
  }
  ++line_number;
  const std::vector<std::string> header = split_csv_line(line);
  const std::vector<std::string> expected = {"id", "negative for pneumonia", "typical appearance",
                                             "indeterminate appearance", "atypical appearance"};
  if (header.size() != expected.size()) {
    throw MalformedAnnotationError("label header must have the id column plus four flags",
                                   line_number);
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (lower(header[i]) != expected[i]) {
      throw MalformedAnnotationError("unexpected label column '" + header[i] + "'", line_number);
    }
  }

  std::vector<StudyLabel> labels;
  while (std::getline(stream, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 5) {
      throw MalformedAnnotationError("expected 5 fields, got " + std::to_string(fields.size()),
                                     line_number);
    }
    int hot = -1;
    for (int f = 1; f <= 4; ++f) {
      const std::string& v = fields[static_cast<std::size_t>(f)];
      if (v != "0" && v != "1") {
        throw MalformedAnnotationError("flag must be 0 or 1, got '" + v + "'", line_number);
      }
      if (v == "1") {
        if (hot != -1) {
          throw MalformedAnnotationError("multiple appearance flags set", line_number);
        }
        hot = f - 1;
      }
    }
    if (hot == -1) {
      throw MalformedAnnotationError("no appearance flag set", line_number);
    }
    labels.push_back({fields[0], static_cast<StudyClass>(hot)});
  }
  return labels;
}

void clamp_boxes(ImageAnnotation& annotation, int width, int height) {
  for (auto& gt : annotation.boxes) {
    gt.box.x_min = std::clamp(gt.box.x_min, 0.0, static_cast<double>(width));
    gt.box.x_max = std::clamp(gt.box.x_max, 0.0, static_cast<double>(width));
    gt.box.y_min = std::clamp(gt.box.y_min, 0.0, static_cast<double>(height));
    gt.box.y_max = std::clamp(gt.box.y_max, 0.0, static_cast<double>(height));
  }
}

std::map<std::string, std::size_t> body_part_distribution(const std::vector<DicomImage>& images) {
  std::map<std::string, std::size_t> histogram;
  for (const auto& img : images) {
    ++histogram[img.body_part.empty() ? "UNKNOWN" : img.body_part];
  }
  return histogram;
}

}  // namespace radeval::ingest
