#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace radeval::ingest::dicom {

struct Tag {
  std::uint16_t group = 0;
  std::uint16_t element = 0;

  bool operator==(const Tag&) const = default;
};

inline constexpr Tag kTransferSyntaxUid{0x0002, 0x0010};
inline constexpr Tag kSopInstanceUid{0x0008, 0x0018};
inline constexpr Tag kBodyPartExamined{0x0018, 0x0015};
inline constexpr Tag kStudyInstanceUid{0x0020, 0x000D};
inline constexpr Tag kPhotometricInterpretation{0x0028, 0x0004};
inline constexpr Tag kRows{0x0028, 0x0010};
inline constexpr Tag kColumns{0x0028, 0x0011};
inline constexpr Tag kBitsAllocated{0x0028, 0x0100};
inline constexpr Tag kWindowCenter{0x0028, 0x1050};
inline constexpr Tag kWindowWidth{0x0028, 0x1051};
inline constexpr Tag kPixelData{0x7FE0, 0x0010};

inline constexpr const char* kImplicitVrLittleEndian = "1.2.840.10008.1.2";
inline constexpr const char* kExplicitVrLittleEndian = "1.2.840.10008.1.2.1";

/// One data element, kept raw enough that serialize() reproduces the input
/// byte for byte. For undefined-length elements `value` holds everything up
/// to and including the delimiter item.
struct DataElement {
  Tag tag;
  std::string vr;  // empty when parsed from an implicit-VR stream
  bool undefined_length = false;
  std::vector<std::uint8_t> value;
};

struct DataSet {
  bool has_preamble = false;
  std::vector<std::uint8_t> preamble;  // 128 bytes when present
  std::string transfer_syntax;         // empty for raw implicit-VR streams
  bool explicit_vr = false;            // encoding of the main data set
  std::vector<DataElement> meta;       // group 0002, always explicit VR
  std::vector<DataElement> elements;
};

/// Parses a Part-10 stream (preamble + DICM) or a raw implicit-VR stream.
/// Recognized-but-unsupported transfer syntaxes raise UnsupportedSyntaxError;
/// every structural problem raises MalformedFileError with a byte offset.
DataSet parse_stream(std::span<const std::uint8_t> bytes);

/// Inverse of parse_stream for the supported scope: byte-exact on any stream
/// parse_stream accepted.
std::vector<std::uint8_t> serialize(const DataSet& ds);

const DataElement* find(const std::vector<DataElement>& elements, Tag tag);

// Value decoding; each raises MalformedFileError on bad content.
std::uint16_t read_u16(const DataElement& e);
std::string read_string(const DataElement& e);
std::optional<double> read_first_decimal(const DataElement& e);

}  // namespace radeval::ingest::dicom
