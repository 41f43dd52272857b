#include <unistd.h>

#include <fstream>

#include <doctest.h>

#include "radeval/error.hpp"
#include "radeval/io.hpp"
#include "temp_dir.hpp"

using namespace radeval;
using testfix::TempDir;

TEST_SUITE("io") {

TEST_CASE("tensor container round trip with image metadata") {
  TempDir dir("tensorfile");
  io::TensorFile file;
  file.tensors["img0/stride8"] = {{1, 2, 2, 6}, std::vector<float>(24, 0.0f)};
  for (std::size_t i = 0; i < 24; ++i) {
    file.tensors["img0/stride8"].data[i] = static_cast<float>(i) * 0.25f - 2.0f;
  }
  file.tensors["bias"] = {{3}, {1.0f, -2.5f, 3.25f}};
  io::ImageMeta meta;
  meta.width = 640;
  meta.height = 480;
  meta.letterbox = geometry::LetterboxTransform::fit(640, 480, 512, 512);
  file.images["img0"] = meta;

  const std::string path = dir.file("grids.bin");
  io::write_tensor_file(path, file);
  const io::TensorFile loaded = io::read_tensor_file(path);

  REQUIRE(loaded.tensors.size() == 2);
  CHECK(loaded.tensors.at("img0/stride8").shape == std::vector<int>{1, 2, 2, 6});
  CHECK(loaded.tensors.at("img0/stride8").data == file.tensors.at("img0/stride8").data);
  CHECK(loaded.tensors.at("bias").data == file.tensors.at("bias").data);
  REQUIRE(loaded.images.count("img0") == 1);
  CHECK(loaded.images.at("img0").width == 640);
  CHECK(loaded.images.at("img0").letterbox.scale == meta.letterbox.scale);

  // First line of the file is a standalone JSON document.
  std::ifstream in(path, std::ios::binary);
  std::string header;
  std::getline(in, header);
  CHECK(header.front() == '{');
  CHECK(header.find("\"tensors\"") != std::string::npos);
}

TEST_CASE("tensor container rejects structural problems") {
  TempDir dir("tensorbad");
  const std::string path = dir.file("bad.bin");

  io::write_text_file(path, "not json\n\x01\x02");
  CHECK_THROWS_AS(io::read_tensor_file(path), MalformedFileError);

  // Header referencing data beyond the payload (4 floats promised, 1 stored).
  std::string short_payload = R"({"tensors":{"x":{"shape":[4],"offset":0}}})";
  short_payload += '\n';
  short_payload.append(4, '\0');
  io::write_text_file(path, short_payload);
  CHECK_THROWS_AS(io::read_tensor_file(path), MalformedFileError);

  CHECK_THROWS_AS(io::read_tensor_file(dir.file("missing.bin")), MalformedFileError);

  io::TensorFile file;
  file.tensors["x"] = {{2, 2}, {1.0f}};  // shape says 4 values
  CHECK_THROWS_AS(io::write_tensor_file(path, file), ContractError);
}

TEST_CASE("backbone weights survive a save/load cycle bit-exactly") {
  TempDir dir("weights");
  refnet::BackboneConfig config;
  config.base_width = 4;
  config.csp_depths = {1, 2, 1};
  const auto params = refnet::random_backbone_params(config, 21);
  const std::string path = dir.file("weights.bin");
  io::save_backbone_params(path, params);
  const auto loaded = io::load_backbone_params(path, config);

  CHECK(loaded.down1.kernel.data() == params.down1.kernel.data());
  CHECK(loaded.csp3.units[0].expand.bn_gamma == params.csp3.units[0].expand.bn_gamma);

  Tensor x(1, 3, 32, 32);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(i % 17) * 0.1f;
  const auto a = refnet::backbone_forward(x, params);
  const auto b = refnet::backbone_forward(x, loaded);
  CHECK(a.p3.data() == b.p3.data());
  CHECK(a.p5.data() == b.p5.data());
}

TEST_CASE("prediction csv round trip") {
  TempDir dir("pred");
  const std::vector<io::PredictionRecord> records = {
      {"img0", "opacity", 0.875, 10.5, 20.25, 110.0, 220.125},
      {"img1", "opacity", 0.125, 0.0, 0.0, 1.0, 1.0},
  };
  const std::string path = dir.file("pred.csv");
  io::write_predictions(path, records);
  const auto loaded = io::read_predictions(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].image_id == "img0");
  CHECK(loaded[0].class_name == "opacity");
  CHECK(loaded[0].score == 0.875);
  CHECK(loaded[0].y_max == 220.125);
  CHECK(loaded[1].score == 0.125);
}

TEST_CASE("truth csv round trip") {
  TempDir dir("truth");
  const std::vector<io::TruthRecord> records = {{"img0", "opacity", 1.0, 2.0, 3.0, 4.0}};
  const std::string path = dir.file("truth.csv");
  io::write_truth(path, records);
  const auto loaded = io::read_truth(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].x_min == 1.0);
  CHECK(loaded[0].y_max == 4.0);
}

TEST_CASE("record loaders report the offending line") {
  TempDir dir("badrec");
  const std::string path = dir.file("pred.csv");

  io::write_text_file(path, "image_id,class,score,x_min,y_min,x_max,y_max\n"
                            "img0,opacity,0.5,0,0,10,10\n"
                            "img1,opacity,1.5,0,0,10,10\n");
  try {
    io::read_predictions(path);
    FAIL("expected MalformedAnnotationError");
  } catch (const MalformedAnnotationError& e) {
    CHECK(e.row() == 3);  // 1-based, header included
  }

  io::write_text_file(path, "image_id,class,score,x_min,y_min,x_max,y_max\n"
                            "img0,opacity,0.5,20,0,10,10\n");
  CHECK_THROWS_AS(io::read_predictions(path), MalformedAnnotationError);  // max < min

  io::write_text_file(path, "image_id,class,score,x_min,y_min,x_max,y_max\n"
                            "img0,opacity,abc,0,0,10,10\n");
  CHECK_THROWS_AS(io::read_predictions(path), MalformedAnnotationError);

  io::write_text_file(path, "bad,header\n");
  CHECK_THROWS_AS(io::read_predictions(path), MalformedAnnotationError);

  io::write_text_file(path, "image_id,class,x_min,y_min,x_max,y_max\n"
                            "img0,opacity,0,0\n");
  CHECK_THROWS_AS(io::read_truth(path), MalformedAnnotationError);
}

TEST_CASE("pgm round trip") {
  TempDir dir("pgm");
  ingest::GrayImage img;
  img.width = 5;
  img.height = 3;
  img.pixels = {0, 50, 100, 150, 200, 250, 255, 1, 2, 3, 4, 5, 6, 7, 8};
  const std::string path = dir.file("img.pgm");
  io::write_pgm(path, img);
  const auto loaded = io::read_pgm(path);
  CHECK(loaded.width == 5);
  CHECK(loaded.height == 3);
  CHECK(loaded.pixels == img.pixels);

  io::write_text_file(path, "P5\n5 3\n255\nshort");
  CHECK_THROWS_AS(io::read_pgm(path), MalformedFileError);
}

}  // TEST_SUITE
