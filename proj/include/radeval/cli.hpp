#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace radeval::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvariantFailure = 1;
inline constexpr int kExitInputError = 2;

struct IngestOptions {
  std::string dicom_dir;
  std::string out_dir;
  std::string labels_path;  // optional
};

struct EvalOptions {
  std::string pred_path;
  std::string truth_path;
  double iou_threshold = 0.5;
  std::string out_dir = ".";
};

struct DecodeOptions {
  std::string raw_path;
  std::string anchors_path;
  double conf_threshold = 0.001;
  double nms_iou = 0.5;
  std::string out_path = "predictions.csv";
};

struct CompareOptions {
  std::vector<std::string> runs;  // each "name=report.json"
  std::string out_json;           // optional
};

struct BlocksCheckOptions {
  std::uint64_t seed = 0;
  std::string config_path;  // optional
};

int cmd_ingest(const IngestOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_decode(const DecodeOptions& opts, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareOptions& opts, std::ostream& out, std::ostream& err);
int cmd_blocks_check(const BlocksCheckOptions& opts, std::ostream& out, std::ostream& err);

/// Full argv-level entry point used by the binary.
int run(int argc, const char* const* argv);

/// Worker-count cap: RADEVAL_THREADS when set, hardware concurrency otherwise.
unsigned worker_count();

}  // namespace radeval::cli
