#include "radeval/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "radeval/error.hpp"
#include "radeval/ingest.hpp"
#include "radeval/io.hpp"
#include "radeval/metrics.hpp"
#include "radeval/postprocess.hpp"
#include "radeval/refnet.hpp"

namespace radeval::cli {

namespace fs = std::filesystem;
using nlohmann::json;

unsigned worker_count() {
  if (const char* env = std::getenv("RADEVAL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

namespace {

/// Shortest round-trip decimal for a double, via the JSON serializer.
std::string number_str(double v) { return json(v).dump(); }

double round9(double v) { return std::round(v * 1e9) / 1e9; }

std::string sanitize_component(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "_" : out;
}

}  // namespace

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

namespace {

struct IngestFileResult {
  std::string file;  // path relative to the input dir
  bool ok = false;
  std::string error;
  std::string image_id;
  std::string study_id;
  std::string body_part;
  std::string pgm_path;
  std::string sidecar_path;
};

json letterbox_json(const geometry::LetterboxTransform& t) {
  return json{{"src_width", t.src_width}, {"src_height", t.src_height},
              {"dst_width", t.dst_width}, {"dst_height", t.dst_height},
              {"scale", t.scale},         {"pad_left", t.pad_left},
              {"pad_top", t.pad_top}};
}

}  // namespace

int cmd_ingest(const IngestOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    std::map<std::string, ingest::StudyClass> labels;
    if (!opts.labels_path.empty()) {
      for (const auto& label : ingest::load_study_labels(io::read_text_file(opts.labels_path))) {
        labels[label.study_id] = label.label;
      }
    }

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(opts.dicom_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".dcm") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    fs::create_directories(opts.out_dir);

    std::vector<IngestFileResult> results(files.size());
    std::map<std::string, std::size_t> body_parts;
    std::mutex histogram_mutex;

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= files.size()) return;
        IngestFileResult& r = results[i];
        r.file = fs::relative(files[i], opts.dicom_dir).string();
        try {
          std::ifstream in(files[i], std::ios::binary);
          if (!in) throw MalformedFileError("cannot open " + files[i].string());
          std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                          std::istreambuf_iterator<char>());
          const ingest::DicomImage img = ingest::parse_dicom(bytes);
          const ingest::GrayImage gray = ingest::normalize_pixels(img);
          const auto letterbox = geometry::LetterboxTransform::fit(
              gray.width, gray.height, ingest::kModelInputSize, ingest::kModelInputSize);

          const std::string stem = sanitize_component(files[i].stem().string());
          r.pgm_path = (fs::path(opts.out_dir) / (stem + ".pgm")).string();
          r.sidecar_path = (fs::path(opts.out_dir) / (stem + ".json")).string();
          io::write_pgm(r.pgm_path, gray);

          json sidecar = {{"study_id", img.study_id},
                          {"image_id", img.image_id},
                          {"body_part", img.body_part},
                          {"letterbox", letterbox_json(letterbox)}};
          io::write_text_file(r.sidecar_path, sidecar.dump(2) + "\n");

          r.ok = true;
          r.image_id = img.image_id;
          r.study_id = img.study_id;
          r.body_part = img.body_part;
          {
            std::lock_guard<std::mutex> lock(histogram_mutex);
            ++body_parts[img.body_part.empty() ? "UNKNOWN" : img.body_part];
          }
        } catch (const Error& e) {
          r.ok = false;
          r.error = e.what();
        }
      }
    };

    const unsigned n_workers = std::min<unsigned>(worker_count(),
                                                  std::max<std::size_t>(files.size(), 1));
    std::vector<std::thread> threads;
    for (unsigned i = 1; i < n_workers; ++i) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    json entries = json::array();
    std::size_t n_ok = 0;
    for (const auto& r : results) {
      if (r.ok) {
        ++n_ok;
        json entry = {{"file", r.file},         {"status", "ok"},
                      {"image_id", r.image_id}, {"study_id", r.study_id},
                      {"body_part", r.body_part}, {"pgm", r.pgm_path},
                      {"sidecar", r.sidecar_path}};
        if (auto it = labels.find(r.study_id); it != labels.end()) {
          entry["label"] = ingest::study_class_name(it->second);
        }
        entries.push_back(entry);
      } else {
        entries.push_back(json{{"file", r.file}, {"status", "error"}, {"error", r.error}});
      }
    }
    json manifest = {{"entries", entries},
                     {"counts", {{"ok", n_ok}, {"error", results.size() - n_ok}}}};
    io::write_text_file((fs::path(opts.out_dir) / "manifest.json").string(),
                        manifest.dump(2) + "\n");
    io::write_text_file((fs::path(opts.out_dir) / "body_parts.json").string(),
                        json(body_parts).dump(2) + "\n");

    out << "ingested " << n_ok << "/" << results.size() << " files\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "ingest: " << e.what() << "\n";
    return kExitInputError;
  }
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const auto truth_records = io::read_truth(opts.truth_path);
    if (truth_records.empty()) {
      throw MalformedAnnotationError("truth file has no records");
    }
    const auto pred_records = io::read_predictions(opts.pred_path);

    std::set<std::string> names;
    for (const auto& r : truth_records) names.insert(r.class_name);
    for (const auto& r : pred_records) names.insert(r.class_name);
    std::map<std::string, int> class_ids;
    std::vector<std::string> class_names;
    for (const auto& name : names) {  // lexicographic -> deterministic ids
      class_ids[name] = static_cast<int>(class_names.size());
      class_names.push_back(name);
    }

    std::vector<metrics::GroundTruthBox> gts;
    gts.reserve(truth_records.size());
    for (const auto& r : truth_records) {
      gts.push_back({r.image_id, class_ids[r.class_name], {r.x_min, r.y_min, r.x_max, r.y_max}});
    }
    std::vector<metrics::Detection> dets;
    dets.reserve(pred_records.size());
    for (const auto& r : pred_records) {
      dets.push_back({r.image_id, class_ids[r.class_name], r.score,
                      {r.x_min, r.y_min, r.x_max, r.y_max}});
    }

    const auto per_class = metrics::evaluate_per_class(dets, gts, opts.iou_threshold);
    std::map<int, double> per_class_ap;
    for (const auto& [cls, ce] : per_class) per_class_ap[cls] = ce.ap;
    const double map_score = metrics::mean_average_precision(per_class_ap);

    fs::create_directories(opts.out_dir);
    json per_class_json = json::object();
    for (const auto& [cls, ce] : per_class) {
      per_class_json[class_names[static_cast<std::size_t>(cls)]] = ce.ap;
    }
    json report = {{"map", map_score},
                   {"iou_threshold", opts.iou_threshold},
                   {"per_class", per_class_json},
                   {"counts",
                    {{"detections", dets.size()}, {"ground_truth", gts.size()}}}};
    const std::string report_path = (fs::path(opts.out_dir) / "report.json").string();
    io::write_text_file(report_path, report.dump(2) + "\n");

    for (const auto& [cls, ce] : per_class) {
      const std::string name = class_names[static_cast<std::size_t>(cls)];
      std::ostringstream csv;
      csv << "recall,precision\n";
      for (const auto& point : ce.curve) {
        csv << number_str(point.recall) << ',' << number_str(point.precision) << '\n';
      }
      io::write_text_file((fs::path(opts.out_dir) / ("pr_" + sanitize_component(name) + ".csv")).string(),
                          csv.str());
    }

    out << "mAP@" << number_str(opts.iou_threshold) << " = " << number_str(map_score) << " ("
        << report_path << ")\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "eval: " << e.what() << "\n";
    return kExitInputError;
  }
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

namespace {

postprocess::AnchorSet load_anchor_set(const std::string& path,
                                       std::vector<std::string>& class_names) {
  json doc;
  try {
    doc = json::parse(io::read_text_file(path));
  } catch (const json::exception& e) {
    throw MalformedFileError("bad anchors file " + path + ": " + e.what());
  }
  postprocess::AnchorSet set;
  try {
    for (const auto& level : doc.at("levels")) {
      postprocess::AnchorLevel l;
      l.stride = level.at("stride").get<int>();
      for (const auto& a : level.at("anchors")) {
        l.anchors.push_back({a.at(0).get<float>(), a.at(1).get<float>()});
      }
      set.levels.push_back(std::move(l));
    }
    if (doc.contains("classes")) {
      class_names = doc.at("classes").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw MalformedFileError("bad anchors file " + path + ": " + e.what());
  }
  postprocess::validate(set);
  return set;
}

}  // namespace

int cmd_decode(const DecodeOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    std::vector<std::string> class_names;
    const postprocess::AnchorSet anchors = load_anchor_set(opts.anchors_path, class_names);
    const io::TensorFile file = io::read_tensor_file(opts.raw_path);

    auto level_for_stride = [&](int stride) -> const postprocess::AnchorLevel* {
      for (const auto& level : anchors.levels) {
        if (level.stride == stride) return &level;
      }
      return nullptr;
    };

    // Tensor names are "<image_id>/stride<k>"; every image must carry its
    // original geometry in the header.
    std::map<std::string, std::vector<metrics::Detection>> per_image;
    for (const auto& [name, tensor] : file.tensors) {
      const std::size_t slash = name.rfind('/');
      if (slash == std::string::npos || name.compare(slash + 1, 6, "stride") != 0) {
        throw MalformedFileError("tensor '" + name + "' is not named <image>/stride<k>");
      }
      const std::string image_id = name.substr(0, slash);
      int stride = 0;
      try {
        stride = std::stoi(name.substr(slash + 7));
      } catch (const std::exception&) {
        throw MalformedFileError("tensor '" + name + "' has a malformed stride suffix");
      }
      const postprocess::AnchorLevel* level = level_for_stride(stride);
      if (level == nullptr) {
        throw MalformedFileError("tensor '" + name + "' names stride " + std::to_string(stride) +
                                 " absent from the anchor set");
      }
      const auto meta_it = file.images.find(image_id);
      if (meta_it == file.images.end()) {
        throw MalformedFileError("no image metadata for '" + image_id + "'");
      }
      const auto& letterbox = meta_it->second.letterbox;

      postprocess::HeadGrid grid{io::to_tensor(tensor)};
      if (grid.values.c() * stride != letterbox.dst_height ||
          grid.values.h() * stride != letterbox.dst_width) {
        throw ContractError("grid '" + name + "' does not tile the " +
                            std::to_string(letterbox.dst_width) + "x" +
                            std::to_string(letterbox.dst_height) + " model canvas");
      }
      auto dets = postprocess::decode_head(grid, *level, opts.conf_threshold, image_id);
      auto& bucket = per_image[image_id];
      bucket.insert(bucket.end(), dets.begin(), dets.end());
    }

    std::vector<io::PredictionRecord> records;
    for (auto& [image_id, dets] : per_image) {
      const auto meta = file.images.at(image_id);
      for (const auto& det : postprocess::nms(dets, opts.nms_iou)) {
        const geometry::BBox original = geometry::letterbox_invert(meta.letterbox, det.box);
        io::PredictionRecord r;
        r.image_id = image_id;
        r.class_name = det.class_id < static_cast<int>(class_names.size())
                           ? class_names[static_cast<std::size_t>(det.class_id)]
                           : "class" + std::to_string(det.class_id);
        r.score = det.score;
        r.x_min = original.x_min;
        r.y_min = original.y_min;
        r.x_max = original.x_max;
        r.y_max = original.y_max;
        records.push_back(std::move(r));
      }
    }
    io::write_predictions(opts.out_path, records);
    out << "decoded " << records.size() << " detections from " << per_image.size()
        << " images -> " << opts.out_path << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "decode: " << e.what() << "\n";
    return kExitInputError;
  }
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

int cmd_compare(const CompareOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    struct Row {
      std::string name;
      double map_score = 0.0;
    };
    std::vector<Row> rows;
    std::set<std::string> seen;
    for (const auto& spec : opts.runs) {
      const std::size_t eq = spec.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
        throw MalformedAnnotationError("run must be name=REPORT.json, got '" + spec + "'");
      }
      Row row;
      row.name = spec.substr(0, eq);
      if (!seen.insert(row.name).second) {
        throw MalformedAnnotationError("duplicate run name '" + row.name + "'");
      }
      json report;
      try {
        report = json::parse(io::read_text_file(spec.substr(eq + 1)));
        row.map_score = report.at("map").get<double>();
      } catch (const json::exception& e) {
        throw MalformedFileError("bad report for run '" + row.name + "': " + e.what());
      }
      if (row.map_score < 0.0 || row.map_score > 1.0) {
        throw MalformedAnnotationError("run '" + row.name + "' has map outside [0, 1]");
      }
      rows.push_back(std::move(row));
    }
    if (rows.empty()) {
      throw MalformedAnnotationError("no runs given");
    }

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.map_score > b.map_score; });
    const double best = rows.front().map_score;

    std::size_t name_width = 5;  // len("model")
    for (const auto& row : rows) name_width = std::max(name_width, row.name.size());

    out << "model" << std::string(name_width - 5 + 2, ' ') << "map    delta_vs_best\n";
    json rows_json = json::array();
    for (const auto& row : rows) {
      const double delta = round9(best - row.map_score);
      out << row.name << std::string(name_width - row.name.size() + 2, ' ')
          << number_str(row.map_score) << std::string(4, ' ') << number_str(delta) << "\n";
      rows_json.push_back(
          json{{"name", row.name}, {"map", row.map_score}, {"delta_vs_best", delta}});
    }

    json pairs = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = i + 1; j < rows.size(); ++j) {
        pairs.push_back(json{{"a", rows[i].name},
                             {"b", rows[j].name},
                             {"delta", round9(rows[i].map_score - rows[j].map_score)}});
      }
    }
    if (!opts.out_json.empty()) {
      io::write_text_file(opts.out_json,
                          json{{"rows", rows_json}, {"pairs", pairs}}.dump(2) + "\n");
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "compare: " << e.what() << "\n";
    return kExitInputError;
  }
}

// ---------------------------------------------------------------------------
// blocks-check
// ---------------------------------------------------------------------------

int cmd_blocks_check(const BlocksCheckOptions& opts, std::ostream& out, std::ostream& err) {
  refnet::InvariantConfig config;
  if (!opts.config_path.empty()) {
    try {
      const json doc = json::parse(io::read_text_file(opts.config_path));
      if (doc.contains("input")) {
        const auto input = doc.at("input").get<std::vector<int>>();
        if (input.size() != 4) {
          throw MalformedFileError("blocks-check config input must have 4 dims");
        }
        std::copy(input.begin(), input.end(), config.input.begin());
      }
      if (doc.contains("base_width")) {
        config.backbone.base_width = doc.at("base_width").get<int>();
      }
      if (doc.contains("csp_depths")) {
        const auto depths = doc.at("csp_depths").get<std::vector<int>>();
        if (depths.size() != 3) {
          throw MalformedFileError("blocks-check config csp_depths must have 3 entries");
        }
        std::copy(depths.begin(), depths.end(), config.backbone.csp_depths.begin());
      }
    } catch (const std::exception& e) {
      err << "blocks-check: " << e.what() << "\n";
      return kExitInputError;
    }
  }

  const auto results = refnet::run_invariant_suite(config, opts.seed);
  bool all_passed = true;
  for (const auto& r : results) {
    if (r.passed) {
      out << "PASS " << r.name << "\n";
    } else {
      all_passed = false;
      out << "FAIL " << r.name << ": " << r.message << "\n";
    }
  }
  return all_passed ? kExitOk : kExitInvariantFailure;
}

// ---------------------------------------------------------------------------
// argv entry point
// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv) {
  CLI::App app{"Chest-radiograph detection evaluation toolkit"};
  app.require_subcommand(1);

  IngestOptions ingest_opts;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse DICOM studies into PGM + sidecars");
  ingest_cmd->add_option("--dicom-dir", ingest_opts.dicom_dir, "Directory of .dcm files")
      ->required();
  ingest_cmd->add_option("--out-dir", ingest_opts.out_dir, "Output directory")->required();
  ingest_cmd->add_option("--labels", ingest_opts.labels_path, "Study-level label table (CSV)");

  EvalOptions eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  eval_cmd->add_option("--pred", eval_opts.pred_path, "Prediction CSV")->required();
  eval_cmd->add_option("--truth", eval_opts.truth_path, "Ground-truth CSV")->required();
  eval_cmd->add_option("--iou-threshold", eval_opts.iou_threshold, "Match threshold")
      ->default_val(0.5);
  eval_cmd->add_option("--out-dir", eval_opts.out_dir, "Where report.json and PR CSVs go")
      ->default_val(".");

  DecodeOptions decode_opts;
  auto* decode_cmd = app.add_subcommand("decode", "Decode raw head grids into predictions");
  decode_cmd->add_option("--raw", decode_opts.raw_path, "Binary head-grid file")->required();
  decode_cmd->add_option("--anchors", decode_opts.anchors_path, "Anchor configuration (JSON)")
      ->required();
  decode_cmd->add_option("--conf", decode_opts.conf_threshold, "Confidence threshold")
      ->default_val(0.001);
  decode_cmd->add_option("--nms-iou", decode_opts.nms_iou, "NMS IoU threshold")->default_val(0.5);
  decode_cmd->add_option("--out", decode_opts.out_path, "Output prediction CSV")
      ->default_val("predictions.csv");

  CompareOptions compare_opts;
  auto* compare_cmd = app.add_subcommand("compare", "Tabulate mAP across runs");
  compare_cmd->add_option("--runs", compare_opts.runs, "name=REPORT.json entries")
      ->required()
      ->expected(-1);
  compare_cmd->add_option("--json", compare_opts.out_json, "Also write the table as JSON");

  BlocksCheckOptions blocks_opts;
  auto* blocks_cmd = app.add_subcommand("blocks-check", "Run the network-block invariant suite");
  blocks_cmd->add_option("--seed", blocks_opts.seed, "Weight seed")->default_val(0);
  blocks_cmd->add_option("--config", blocks_opts.config_path, "Invariant config (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  if (ingest_cmd->parsed()) return cmd_ingest(ingest_opts, std::cout, std::cerr);
  if (eval_cmd->parsed()) return cmd_eval(eval_opts, std::cout, std::cerr);
  if (decode_cmd->parsed()) return cmd_decode(decode_opts, std::cout, std::cerr);
  if (compare_cmd->parsed()) return cmd_compare(compare_opts, std::cout, std::cerr);
  if (blocks_cmd->parsed()) return cmd_blocks_check(blocks_opts, std::cout, std::cerr);
  return kExitInputError;
}

}  // namespace radeval::cli
