#include "radeval/dicom.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <string>

#include "radeval/error.hpp"

namespace radeval::ingest::dicom {

namespace {

constexpr std::size_t kPreambleSize = 128;
constexpr std::uint32_t kUndefinedLength = 0xFFFFFFFFu;
constexpr int kMaxSequenceDepth = 64;

// VRs carrying a 2-byte reserved field and a 4-byte length in explicit VR.
bool is_long_vr(const std::string& vr) {
  static constexpr std::array<const char*, 11> kLong = {"OB", "OD", "OF", "OL", "OV", "OW",
                                                        "SQ", "UC", "UR", "UT", "UN"};
  return std::any_of(kLong.begin(), kLong.end(), [&vr](const char* v) { return vr == v; });
}

bool is_vr_char(char c) { return c >= 'A' && c <= 'Z'; }

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool done() const { return pos_ >= bytes_.size(); }

  std::uint8_t u8() {
    need(1, "byte");
    return bytes_[pos_++];
  }

  std::uint16_t u16() {
    need(2, "16-bit field");
    const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_]) |
                            static_cast<std::uint16_t>(bytes_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    need(4, "32-bit field");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = v << 8 | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }

  std::vector<std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    std::vector<std::uint8_t> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

  void skip(std::size_t n, const char* what) {
    need(n, what);
    pos_ += n;
  }

  std::uint16_t peek_u16(std::size_t offset) const {
    if (pos_ + offset + 2 > bytes_.size()) {
      throw MalformedFileError("truncated stream while peeking", pos_);
    }
    return static_cast<std::uint16_t>(bytes_[pos_ + offset]) |
           static_cast<std::uint16_t>(bytes_[pos_ + offset + 1]) << 8;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size()) {
      throw MalformedFileError(std::string("truncated ") + what, pos_);
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// Walks nested items/sequences of undefined length until the matching
// delimiter, returning the content bytes including the delimiter element.
std::vector<std::uint8_t> consume_undefined_sequence(Reader& r, bool explicit_vr, int depth);

std::vector<std::uint8_t> consume_undefined_item(Reader& r, bool explicit_vr, int depth) {
  if (depth > kMaxSequenceDepth) {
    throw MalformedFileError("sequence nesting exceeds supported depth", r.pos());
  }
  std::vector<std::uint8_t> content;
  // An undefined-length item holds data elements until (FFFE,E00D).
  while (true) {
    const std::size_t start = r.pos();
    const std::uint16_t group = r.u16();
    const std::uint16_t element = r.u16();
    if (group == 0xFFFE && element == 0xE00D) {
      const std::uint32_t len = r.u32();
      if (len != 0) throw MalformedFileError("item delimiter with non-zero length", start);
      for (std::uint8_t b : {std::uint8_t(0xFE), std::uint8_t(0xFF), std::uint8_t(0x0D),
                             std::uint8_t(0xE0), std::uint8_t(0), std::uint8_t(0),
                             std::uint8_t(0), std::uint8_t(0)}) {
        content.push_back(b);
      }
      return content;
    }
    // Re-encode the element header verbatim while consuming it.
    content.push_back(static_cast<std::uint8_t>(group & 0xFF));
    content.push_back(static_cast<std::uint8_t>(group >> 8));
    content.push_back(static_cast<std::uint8_t>(element & 0xFF));
    content.push_back(static_cast<std::uint8_t>(element >> 8));
    std::uint32_t length = 0;
    if (explicit_vr) {
      const std::vector<std::uint8_t> vr_bytes = r.take(2, "VR");
      content.insert(content.end(), vr_bytes.begin(), vr_bytes.end());
      const std::string vr(vr_bytes.begin(), vr_bytes.end());
      if (is_long_vr(vr)) {
        const std::vector<std::uint8_t> reserved = r.take(2, "VR reserved bytes");
        content.insert(content.end(), reserved.begin(), reserved.end());
        length = r.u32();
        for (int i = 0; i < 4; ++i) {
          content.push_back(static_cast<std::uint8_t>(length >> (8 * i) & 0xFF));
        }
      } else {
        const std::uint16_t short_len = r.u16();
        content.push_back(static_cast<std::uint8_t>(short_len & 0xFF));
        content.push_back(static_cast<std::uint8_t>(short_len >> 8));
        length = short_len;
      }
    } else {
      length = r.u32();
      for (int i = 0; i < 4; ++i) {
        content.push_back(static_cast<std::uint8_t>(length >> (8 * i) & 0xFF));
      }
    }
    if (length == kUndefinedLength) {
      auto nested = consume_undefined_sequence(r, explicit_vr, depth + 1);
      content.insert(content.end(), nested.begin(), nested.end());
    } else {
      auto value = r.take(length, "element value");
      content.insert(content.end(), value.begin(), value.end());
    }
  }
}

std::vector<std::uint8_t> consume_undefined_sequence(Reader& r, bool explicit_vr, int depth) {
  if (depth > kMaxSequenceDepth) {
    throw MalformedFileError("sequence nesting exceeds supported depth", r.pos());
  }
  std::vector<std::uint8_t> content;
  // A sequence of undefined length holds items until (FFFE,E0DD).
  while (true) {
    const std::size_t start = r.pos();
    const std::uint16_t group = r.u16();
    const std::uint16_t element = r.u16();
    const std::uint32_t len = r.u32();
    content.push_back(static_cast<std::uint8_t>(group & 0xFF));
    content.push_back(static_cast<std::uint8_t>(group >> 8));
    content.push_back(static_cast<std::uint8_t>(element & 0xFF));
    content.push_back(static_cast<std::uint8_t>(element >> 8));
    for (int i = 0; i < 4; ++i) {
      content.push_back(static_cast<std::uint8_t>(len >> (8 * i) & 0xFF));
    }
    if (group == 0xFFFE && element == 0xE0DD) {
      if (len != 0) throw MalformedFileError("sequence delimiter with non-zero length", start);
      return content;
    }
    if (group != 0xFFFE || element != 0xE000) {
      throw MalformedFileError("expected sequence item tag", start);
    }
    if (len == kUndefinedLength) {
      auto item = consume_undefined_item(r, explicit_vr, depth + 1);
      content.insert(content.end(), item.begin(), item.end());
    } else {
      auto value = r.take(len, "sequence item");
      content.insert(content.end(), value.begin(), value.end());
    }
  }
}

DataElement parse_element(Reader& r, bool explicit_vr) {
  const std::size_t start = r.pos();
  DataElement e;
  e.tag.group = r.u16();
  e.tag.element = r.u16();

  std::uint32_t length = 0;
  if (explicit_vr) {
    const std::vector<std::uint8_t> vr_bytes = r.take(2, "VR");
    e.vr.assign(vr_bytes.begin(), vr_bytes.end());
    if (!is_vr_char(e.vr[0]) || !is_vr_char(e.vr[1])) {
      throw MalformedFileError("invalid VR in explicit-VR stream", start);
    }
    if (is_long_vr(e.vr)) {
      r.skip(2, "VR reserved bytes");
      length = r.u32();
    } else {
      length = r.u16();
    }
  } else {
    length = r.u32();
  }

  if (length == kUndefinedLength) {
    // Undefined length is only meaningful for sequences; encapsulated pixel
    // data implies a compressed syntax, which is out of scope.
    if (e.tag == kPixelData) {
      throw UnsupportedSyntaxError("encapsulated pixel data");
    }
    if (explicit_vr && e.vr != "SQ" && e.vr != "UN") {
      throw MalformedFileError("undefined length on a non-sequence element", start);
    }
    e.undefined_length = true;
    e.value = consume_undefined_sequence(r, explicit_vr && e.vr != "UN", 0);
  } else {
    e.value = r.take(length, "element value");
  }
  return e;
}

bool starts_with_dicm(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= kPreambleSize + 4 && bytes[kPreambleSize] == 'D' &&
         bytes[kPreambleSize + 1] == 'I' && bytes[kPreambleSize + 2] == 'C' &&
         bytes[kPreambleSize + 3] == 'M';
}

void append_element(std::vector<std::uint8_t>& out, const DataElement& e, bool explicit_vr) {
  out.push_back(static_cast<std::uint8_t>(e.tag.group & 0xFF));
  out.push_back(static_cast<std::uint8_t>(e.tag.group >> 8));
  out.push_back(static_cast<std::uint8_t>(e.tag.element & 0xFF));
  out.push_back(static_cast<std::uint8_t>(e.tag.element >> 8));
  const std::uint32_t length =
      e.undefined_length ? kUndefinedLength : static_cast<std::uint32_t>(e.value.size());
  if (explicit_vr) {
    out.push_back(static_cast<std::uint8_t>(e.vr[0]));
    out.push_back(static_cast<std::uint8_t>(e.vr[1]));
    if (is_long_vr(e.vr)) {
      out.push_back(0);
      out.push_back(0);
      for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(length >> (8 * i) & 0xFF));
      }
    } else {
      out.push_back(static_cast<std::uint8_t>(length & 0xFF));
      out.push_back(static_cast<std::uint8_t>(length >> 8));
    }
  } else {
    for (int i = 0; i < 4; ++i) {
      out.push_back(static_cast<std::uint8_t>(length >> (8 * i) & 0xFF));
    }
  }
  out.insert(out.end(), e.value.begin(), e.value.end());
}

}  // namespace

DataSet parse_stream(std::span<const std::uint8_t> bytes) {
  DataSet ds;
  Reader r(bytes);

  if (starts_with_dicm(bytes)) {
    ds.has_preamble = true;
    ds.preamble = r.take(kPreambleSize, "preamble");
    r.skip(4, "DICM magic");

    // File meta group: always explicit VR little endian.
    while (!r.done() && r.peek_u16(0) == 0x0002) {
      ds.meta.push_back(parse_element(r, /*explicit_vr=*/true));
    }
    const DataElement* ts = find(ds.meta, kTransferSyntaxUid);
    if (ts == nullptr) {
      throw MalformedFileError("file meta lacks a transfer syntax UID");
    }
    ds.transfer_syntax = read_string(*ts);
    if (ds.transfer_syntax == kExplicitVrLittleEndian) {
      ds.explicit_vr = true;
    } else if (ds.transfer_syntax == kImplicitVrLittleEndian) {
      ds.explicit_vr = false;
    } else {
      throw UnsupportedSyntaxError(ds.transfer_syntax);
    }
  } else {
    ds.explicit_vr = false;  // raw implicit-VR stream
  }

  while (!r.done()) {
    ds.elements.push_back(parse_element(r, ds.explicit_vr));
  }
  return ds;
}

std::vector<std::uint8_t> serialize(const DataSet& ds) {
  std::vector<std::uint8_t> out;
  if (ds.has_preamble) {
    out = ds.preamble;
    out.resize(kPreambleSize, 0);
    out.push_back('D');
    out.push_back('I');
    out.push_back('C');
    out.push_back('M');
    for (const auto& e : ds.meta) append_element(out, e, /*explicit_vr=*/true);
  }
  for (const auto& e : ds.elements) append_element(out, e, ds.explicit_vr);
  return out;
}

const DataElement* find(const std::vector<DataElement>& elements, Tag tag) {
  for (const auto& e : elements) {
    if (e.tag == tag) return &e;
  }
  return nullptr;
}

std::uint16_t read_u16(const DataElement& e) {
  if (e.value.size() < 2) {
    throw MalformedFileError("element value too short for a 16-bit integer");
  }
  return static_cast<std::uint16_t>(e.value[0]) | static_cast<std::uint16_t>(e.value[1]) << 8;
}

std::string read_string(const DataElement& e) {
  std::string s(e.value.begin(), e.value.end());
  while (!s.empty() && (s.back() == ' ' || s.back() == '\0')) s.pop_back();
  return s;
}

std::optional<double> read_first_decimal(const DataElement& e) {
  std::string s = read_string(e);
  const std::size_t backslash = s.find('\\');
  if (backslash != std::string::npos) s.resize(backslash);
  try {
    std::size_t consumed = 0;
    const double v = std::stod(s, &consumed);
    while (consumed < s.size() && s[consumed] == ' ') ++consumed;
    if (consumed != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace radeval::ingest::dicom
