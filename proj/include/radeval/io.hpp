#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "radeval/geometry.hpp"
#include "radeval/ingest.hpp"
#include "radeval/refnet.hpp"
#include "radeval/tensor.hpp"

namespace radeval::io {

// ---------------------------------------------------------------------------
// Tensor container: one line of compact JSON, newline, then a flat payload of
// little-endian 32-bit floats. The header maps tensor names to shapes and
// byte offsets into the payload; an optional "images" object carries
// per-image metadata for detection-head dumps.
// ---------------------------------------------------------------------------

struct NamedTensor {
  std::vector<int> shape;
  std::vector<float> data;
};

struct ImageMeta {
  int width = 0;   // original image, pixels
  int height = 0;
  geometry::LetterboxTransform letterbox;
};

struct TensorFile {
  std::map<std::string, NamedTensor> tensors;
  std::map<std::string, ImageMeta> images;
};

void write_tensor_file(const std::string& path, const TensorFile& file);
TensorFile read_tensor_file(const std::string& path);

NamedTensor to_named(const Tensor& t);
Tensor to_tensor(const NamedTensor& t);  // requires rank 4

// Flat-name save/load of backbone weights in the container format.
void save_backbone_params(const std::string& path, const refnet::BackboneParams& params);
refnet::BackboneParams load_backbone_params(const std::string& path,
                                            const refnet::BackboneConfig& config);

// ---------------------------------------------------------------------------
// Prediction / truth record files: comma-separated with a fixed header,
// boxes in original-image pixels under the half-open xyxy convention.
//   predictions: image_id,class,score,x_min,y_min,x_max,y_max
//   truth:       image_id,class,x_min,y_min,x_max,y_max
// ---------------------------------------------------------------------------

struct PredictionRecord {
  std::string image_id;
  std::string class_name;
  double score = 0.0;
  double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;
};

struct TruthRecord {
  std::string image_id;
  std::string class_name;
  double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;
};

std::vector<PredictionRecord> read_predictions(const std::string& path);
void write_predictions(const std::string& path, const std::vector<PredictionRecord>& records);
std::vector<TruthRecord> read_truth(const std::string& path);
void write_truth(const std::string& path, const std::vector<TruthRecord>& records);

// ---------------------------------------------------------------------------
// 8-bit binary PGM (P5).
// ---------------------------------------------------------------------------

void write_pgm(const std::string& path, const ingest::GrayImage& img);
ingest::GrayImage read_pgm(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace radeval::io
