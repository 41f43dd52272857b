#include "radeval/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "radeval/error.hpp"

namespace radeval::io {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw MalformedFileError("cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw MalformedFileError("cannot write " + path);
  return out;
}

void append_float_le(std::string& payload, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap32(bits);
  }
  payload.append(reinterpret_cast<const char*>(&bits), sizeof(bits));
}

float float_from_le(const char* bytes) {
  std::uint32_t bits;
  std::memcpy(&bits, bytes, sizeof(bits));
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap32(bits);
  }
  float v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

json letterbox_to_json(const geometry::LetterboxTransform& t) {
  return json{{"src_width", t.src_width}, {"src_height", t.src_height},
              {"dst_width", t.dst_width}, {"dst_height", t.dst_height},
              {"scale", t.scale},         {"pad_left", t.pad_left},
              {"pad_top", t.pad_top}};
}

geometry::LetterboxTransform letterbox_from_json(const json& j) {
  geometry::LetterboxTransform t;
  t.src_width = j.at("src_width").get<int>();
  t.src_height = j.at("src_height").get<int>();
  t.dst_width = j.at("dst_width").get<int>();
  t.dst_height = j.at("dst_height").get<int>();
  t.scale = j.at("scale").get<double>();
  t.pad_left = j.at("pad_left").get<double>();
  t.pad_top = j.at("pad_top").get<double>();
  return t;
}

}  // namespace

void write_tensor_file(const std::string& path, const TensorFile& file) {
  std::string payload;
  json tensors = json::object();
  for (const auto& [name, tensor] : file.tensors) {
    std::size_t expected = 1;
    for (int d : tensor.shape) {
      if (d <= 0) throw ContractError("tensor '" + name + "' has a non-positive dim");
      expected *= static_cast<std::size_t>(d);
    }
    if (expected != tensor.data.size()) {
      throw ContractError("tensor '" + name + "' data does not match its shape");
    }
    tensors[name] = {{"shape", tensor.shape}, {"offset", payload.size()}};
    for (float v : tensor.data) append_float_le(payload, v);
  }
  json header = {{"tensors", tensors}};
  if (!file.images.empty()) {
    json images = json::object();
    for (const auto& [id, meta] : file.images) {
      images[id] = {{"width", meta.width},
                    {"height", meta.height},
                    {"letterbox", letterbox_to_json(meta.letterbox)}};
    }
    header["images"] = images;
  }

  auto out = open_output(path, std::ios::binary);
  out << header.dump() << '\n' << payload;
}

TensorFile read_tensor_file(const std::string& path) {
  auto in = open_input(path, std::ios::binary);
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw MalformedFileError("missing tensor-file header in " + path);
  }
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw MalformedFileError("bad tensor-file header in " + path + ": " + e.what());
  }

  std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  TensorFile file;
  try {
    for (const auto& [name, entry] : header.at("tensors").items()) {
      NamedTensor t;
      t.shape = entry.at("shape").get<std::vector<int>>();
      std::size_t count = 1;
      for (int d : t.shape) {
        if (d <= 0) throw MalformedFileError("tensor '" + name + "' has a non-positive dim");
        count *= static_cast<std::size_t>(d);
      }
      const std::size_t offset = entry.at("offset").get<std::size_t>();
      if (offset % 4 != 0 || offset + count * 4 > payload.size()) {
        throw MalformedFileError("tensor '" + name + "' overruns the payload");
      }
      t.data.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        t.data[i] = float_from_le(payload.data() + offset + i * 4);
      }
      file.tensors.emplace(name, std::move(t));
    }
    if (header.contains("images")) {
      for (const auto& [id, entry] : header.at("images").items()) {
        ImageMeta meta;
        meta.width = entry.at("width").get<int>();
        meta.height = entry.at("height").get<int>();
        meta.letterbox = letterbox_from_json(entry.at("letterbox"));
        file.images.emplace(id, meta);
      }
    }
  } catch (const json::exception& e) {
    throw MalformedFileError("bad tensor-file header in " + path + ": " + e.what());
  }
  return file;
}

NamedTensor to_named(const Tensor& t) {
  NamedTensor out;
  out.shape = {t.n(), t.c(), t.h(), t.w()};
  out.data = t.data();
  return out;
}

Tensor to_tensor(const NamedTensor& t) {
  if (t.shape.size() != 4) {
    throw ContractError("expected a rank-4 tensor, got rank " + std::to_string(t.shape.size()));
  }
  Tensor out(t.shape[0], t.shape[1], t.shape[2], t.shape[3]);
  out.data() = t.data;
  return out;
}

namespace {

void put_conv(TensorFile& file, const std::string& prefix, const refnet::ConvParams& p) {
  file.tensors[prefix + ".kernel"] = to_named(p.kernel);
  file.tensors[prefix + ".bn_gamma"] = {{static_cast<int>(p.bn_gamma.size())}, p.bn_gamma};
  file.tensors[prefix + ".bn_beta"] = {{static_cast<int>(p.bn_beta.size())}, p.bn_beta};
  file.tensors[prefix + ".bn_mean"] = {{static_cast<int>(p.bn_mean.size())}, p.bn_mean};
  file.tensors[prefix + ".bn_var"] = {{static_cast<int>(p.bn_var.size())}, p.bn_var};
}

void get_conv(const TensorFile& file, const std::string& prefix, refnet::ConvParams& p) {
  auto fetch = [&](const std::string& name) -> const NamedTensor& {
    auto it = file.tensors.find(name);
    if (it == file.tensors.end()) {
      throw MalformedFileError("weights file lacks tensor '" + name + "'");
    }
    return it->second;
  };
  p.kernel = to_tensor(fetch(prefix + ".kernel"));
  p.bn_gamma = fetch(prefix + ".bn_gamma").data;
  p.bn_beta = fetch(prefix + ".bn_beta").data;
  p.bn_mean = fetch(prefix + ".bn_mean").data;
  p.bn_var = fetch(prefix + ".bn_var").data;
}

void put_csp(TensorFile& file, const std::string& prefix, const refnet::CspParams& p) {
  put_conv(file, prefix + ".stem", p.stem);
  for (std::size_t i = 0; i < p.units.size(); ++i) {
    put_conv(file, prefix + ".unit" + std::to_string(i) + ".reduce", p.units[i].reduce);
    put_conv(file, prefix + ".unit" + std::to_string(i) + ".expand", p.units[i].expand);
  }
  file.tensors[prefix + ".shortcut.kernel"] = to_named(p.shortcut.kernel);
  put_conv(file, prefix + ".fuse", p.fuse);
}

void get_csp(const TensorFile& file, const std::string& prefix, int depth,
             refnet::CspParams& p) {
  get_conv(file, prefix + ".stem", p.stem);
  p.units.resize(static_cast<std::size_t>(depth));
  for (int i = 0; i < depth; ++i) {
    get_conv(file, prefix + ".unit" + std::to_string(i) + ".reduce", p.units[static_cast<std::size_t>(i)].reduce);
    get_conv(file, prefix + ".unit" + std::to_string(i) + ".expand", p.units[static_cast<std::size_t>(i)].expand);
  }
  auto it = file.tensors.find(prefix + ".shortcut.kernel");
  if (it == file.tensors.end()) {
    throw MalformedFileError("weights file lacks tensor '" + prefix + ".shortcut.kernel'");
  }
  p.shortcut.kernel = to_tensor(it->second);
  get_conv(file, prefix + ".fuse", p.fuse);
}

}  // namespace

void save_backbone_params(const std::string& path, const refnet::BackboneParams& params) {
  TensorFile file;
  put_conv(file, "focus.conv", params.focus.conv);
  put_conv(file, "down1", params.down1);
  put_csp(file, "csp1", params.csp1);
  put_conv(file, "down2", params.down2);
  put_csp(file, "csp2", params.csp2);
  put_conv(file, "down3", params.down3);
  put_csp(file, "csp3", params.csp3);
  put_conv(file, "down4", params.down4);
  put_conv(file, "spp.project", params.spp.project);
  write_tensor_file(path, file);
}

refnet::BackboneParams load_backbone_params(const std::string& path,
                                            const refnet::BackboneConfig& config) {
  const TensorFile file = read_tensor_file(path);
  refnet::BackboneParams params = refnet::random_backbone_params(config, 0);
  get_conv(file, "focus.conv", params.focus.conv);
  get_conv(file, "down1", params.down1);
  get_csp(file, "csp1", config.csp_depths[0], params.csp1);
  get_conv(file, "down2", params.down2);
  get_csp(file, "csp2", config.csp_depths[1], params.csp2);
  get_conv(file, "down3", params.down3);
  get_csp(file, "csp3", config.csp_depths[2], params.csp3);
  get_conv(file, "down4", params.down4);
  get_conv(file, "spp.project", params.spp.project);
  return params;
}

// ---------------------------------------------------------------------------
// CSV records
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kPredictionHeader = "image_id,class,score,x_min,y_min,x_max,y_max";
constexpr const char* kTruthHeader = "image_id,class,x_min,y_min,x_max,y_max";

std::string trim_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& s, const char* what, std::size_t line_number) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(s, &consumed);
    if (consumed != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw MalformedAnnotationError(std::string("bad ") + what + " '" + s + "'", line_number);
  }
}

void check_box(double x_min, double y_min, double x_max, double y_max, std::size_t line_number) {
  if (x_max < x_min || y_max < y_min) {
    throw MalformedAnnotationError("box has max < min", line_number);
  }
}

std::string format_number(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::vector<PredictionRecord> read_predictions(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_number = 0;
  if (!std::getline(in, line)) {
    throw MalformedAnnotationError("empty prediction file " + path);
  }
  ++line_number;
  if (trim_cr(line) != kPredictionHeader) {
    throw MalformedAnnotationError("prediction header must be '" +
                                       std::string(kPredictionHeader) + "'",
                                   line_number);
  }
  std::vector<PredictionRecord> records;
  while (std::getline(in, line)) {
    ++line_number;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 7) {
      throw MalformedAnnotationError("expected 7 fields, got " + std::to_string(fields.size()),
                                     line_number);
    }
    PredictionRecord r;
    r.image_id = fields[0];
    r.class_name = fields[1];
    r.score = parse_number(fields[2], "score", line_number);
    if (r.score < 0.0 || r.score > 1.0) {
      throw MalformedAnnotationError("score outside [0, 1]", line_number);
    }
    r.x_min = parse_number(fields[3], "x_min", line_number);
    r.y_min = parse_number(fields[4], "y_min", line_number);
    r.x_max = parse_number(fields[5], "x_max", line_number);
    r.y_max = parse_number(fields[6], "y_max", line_number);
    check_box(r.x_min, r.y_min, r.x_max, r.y_max, line_number);
    records.push_back(std::move(r));
  }
  return records;
}

void write_predictions(const std::string& path, const std::vector<PredictionRecord>& records) {
  auto out = open_output(path);
  out << kPredictionHeader << '\n';
  for (const auto& r : records) {
    out << r.image_id << ',' << r.class_name << ',' << format_number(r.score) << ','
        << format_number(r.x_min) << ',' << format_number(r.y_min) << ','
        << format_number(r.x_max) << ',' << format_number(r.y_max) << '\n';
  }
}

std::vector<TruthRecord> read_truth(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_number = 0;
  if (!std::getline(in, line)) {
    throw MalformedAnnotationError("empty truth file " + path);
  }
  ++line_number;
  if (trim_cr(line) != kTruthHeader) {
    throw MalformedAnnotationError("truth header must be '" + std::string(kTruthHeader) + "'",
                                   line_number);
  }
  std::vector<TruthRecord> records;
  while (std::getline(in, line)) {
    ++line_number;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 6) {
      throw MalformedAnnotationError("expected 6 fields, got " + std::to_string(fields.size()),
                                     line_number);
    }
    TruthRecord r;
    r.image_id = fields[0];
    r.class_name = fields[1];
    r.x_min = parse_number(fields[2], "x_min", line_number);
    r.y_min = parse_number(fields[3], "y_min", line_number);
    r.x_max = parse_number(fields[4], "x_max", line_number);
    r.y_max = parse_number(fields[5], "y_max", line_number);
    check_box(r.x_min, r.y_min, r.x_max, r.y_max, line_number);
    records.push_back(std::move(r));
  }
  return records;
}

void write_truth(const std::string& path, const std::vector<TruthRecord>& records) {
  auto out = open_output(path);
  out << kTruthHeader << '\n';
  for (const auto& r : records) {
    out << r.image_id << ',' << r.class_name << ',' << format_number(r.x_min) << ','
        << format_number(r.y_min) << ',' << format_number(r.x_max) << ','
        << format_number(r.y_max) << '\n';
  }
}

// ---------------------------------------------------------------------------
// PGM
// ---------------------------------------------------------------------------

void write_pgm(const std::string& path, const ingest::GrayImage& img) {
  if (img.width <= 0 || img.height <= 0 ||
      img.pixels.size() != static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height)) {
    throw ContractError("pgm image must be non-empty with width*height pixels");
  }
  auto out = open_output(path, std::ios::binary);
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

ingest::GrayImage read_pgm(const std::string& path) {
  auto in = open_input(path, std::ios::binary);
  std::string magic;
  in >> magic;
  int width = 0, height = 0, maxval = 0;
  in >> width >> height >> maxval;
  if (magic != "P5" || width <= 0 || height <= 0 || maxval != 255) {
    throw MalformedFileError("not an 8-bit P5 PGM: " + path);
  }
  in.get();  // single whitespace after maxval
  ingest::GrayImage img;
  img.width = width;
  img.height = height;
  img.pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw MalformedFileError("truncated PGM payload in " + path);
  }
  return img;
}

std::string read_text_file(const std::string& path) {
  auto in = open_input(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::string& path, const std::string& content) {
  auto out = open_output(path, std::ios::binary);
  out << content;
}

}  // namespace radeval::io
