#include "md/io.hpp"

#include "md/tensor.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace md {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

namespace {

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

void put_f32_le(std::vector<std::uint8_t>& out, float value) { put_le(out, std::bit_cast<std::uint32_t>(value)); }

template <typename U>
U get_le(const std::uint8_t* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

template <typename U>
U get_be(const std::uint8_t* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v = static_cast<U>((v << 8) | p[i]);
  return v;
}

/// Whitespace-separated header tokens of the netpbm family.
class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<std::uint8_t>& bytes) : b_(bytes) {}

  std::string token(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    last_start_ = start;
    while (pos_ < b_.size() && !std::isspace(b_[pos_])) ++pos_;
    if (pos_ == start) throw ParseError(std::string("missing ") + what, start);
    return std::string(b_.begin() + static_cast<std::ptrdiff_t>(start), b_.begin() + static_cast<std::ptrdiff_t>(pos_));
  }

  std::size_t number(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    const std::string t = token(what);
    std::size_t value = 0;
    for (char c : t) {
      if (c < '0' || c > '9') throw ParseError(std::string("bad ") + what + " '" + t + "'", start);
      value = value * 10 + static_cast<std::size_t>(c - '0');
      if (value > (1u << 24)) throw ParseError(std::string(what) + " too large", start);
    }
    return value;
  }

  double real(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    const std::string t = token(what);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v)) throw ParseError(std::string("bad ") + what, start);
    return v;
  }

  /// Exactly one whitespace byte separates the header from the raster.
  std::size_t end_of_header() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) throw ParseError("header not terminated", pos_);
    return pos_ + 1;
  }

  std::size_t pos() const { return pos_; }
  /// Offset of the most recently read token.
  std::size_t last_start() const { return last_start_; }

 private:
  void skip_space() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
  std::size_t last_start_ = 0;
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::uint8_t> encode_pfm(const DepthMap& depth) {
  const std::string header = "Pf\n" + std::to_string(depth.width) + " " + std::to_string(depth.height) + "\n-1.0\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + 4 * depth.size());
  for (std::size_t row = depth.height; row-- > 0;) {
    for (std::size_t x = 0; x < depth.width; ++x) {
      put_f32_le(out, depth.is_valid(row, x) ? depth.at(row, x) : 0.0f);
    }
  }
  return out;
}

DepthMap decode_pfm(const std::vector<std::uint8_t>& bytes) {
  HeaderReader r(bytes);
  const std::string magic = r.token("magic");
  if (magic != "Pf") throw ParseError("not a grayscale PFM (magic '" + magic + "')", 0);
  const std::size_t width = r.number("width");
  const std::size_t height = r.number("height");
  if (width == 0 || height == 0) throw ParseError("zero image dimension", r.pos());
  const double scale = r.real("scale");
  if (scale == 0.0) throw ParseError("scale must be nonzero", r.last_start());
  const std::size_t start = r.end_of_header();
  const std::size_t need = 4 * width * height;
  if (bytes.size() - start < need) {
    throw ParseError("raster truncated: need " + std::to_string(need) + " bytes, have " +
                         std::to_string(bytes.size() - start),
                     bytes.size());
  }
  const bool little = scale < 0.0;
  DepthMap out(height, width, 0.0f, false);
  const std::uint8_t* p = bytes.data() + start;
  for (std::size_t row = height; row-- > 0;) {
    for (std::size_t x = 0; x < width; ++x, p += 4) {
      const std::uint32_t bits = little ? get_le<std::uint32_t>(p) : get_be<std::uint32_t>(p);
      const float v = std::bit_cast<float>(bits);
      out.at(row, x) = v;
      out.valid[row * width + x] = v > 0.0f;
    }
  }
  return out;
}

void write_pfm(const DepthMap& depth, const fs::path& path) { write_bytes(path, encode_pfm(depth)); }
DepthMap read_pfm(const fs::path& path) { return decode_pfm(read_bytes(path)); }

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + 3 * image.height * image.width);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(static_cast<double>(image.at(c, y, x)), 0.0, 1.0);
        out.push_back(static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5)));
      }
    }
  }
  return out;
}

Image decode_ppm(const std::vector<std::uint8_t>& bytes) {
  HeaderReader r(bytes);
  const std::string magic = r.token("magic");
  if (magic != "P6") throw ParseError("not a binary PPM (magic '" + magic + "')", 0);
  const std::size_t width = r.number("width");
  const std::size_t height = r.number("height");
  const std::size_t maxval = r.number("maxval");
  if (maxval != 255) throw ParseError("only maxval 255 is supported", r.last_start());
  const std::size_t start = r.end_of_header();
  if (bytes.size() - start < 3 * width * height) throw ParseError("raster truncated", bytes.size());
  Image out(height, width);
  const std::uint8_t* p = bytes.data() + start;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) out.at(c, y, x) = static_cast<float>(*p++) / 255.0f;
    }
  }
  return out;
}

void write_ppm(const Image& image, const fs::path& path) { write_bytes(path, encode_ppm(image)); }
Image read_ppm(const fs::path& path) { return decode_ppm(read_bytes(path)); }

void write_dataset(const std::vector<Frame>& frames, const fs::path& dir) {
  fs::create_directories(dir);
  std::string m = "format\tmdset1\nframes\t" + std::to_string(frames.size()) + "\n";
  char name[32];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    std::snprintf(name, sizeof name, "frame_%04zu", i);
    write_ppm(f.rgb, dir / (std::string(name) + ".ppm"));
    write_pfm(f.depth, dir / (std::string(name) + ".pfm"));
    m += "frame\t" + std::to_string(i) + "\n";
    m += "scene\t" + std::to_string(f.scene) + "\n";
    m += "rgb\t" + std::string(name) + ".ppm\n";
    m += "depth\t" + std::string(name) + ".pfm\n";
    m += "pose\t";
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m += format_double(f.pose.rotation[r * 3 + c]) + " ";
      m += format_double(f.pose.translation[r]) + (r < 2 ? " " : "\n");
    }
    const auto& k = f.intrinsics;
    m += "intrinsics\t" + format_double(k.fx) + " " + format_double(k.fy) + " " + format_double(k.cx) + " " +
         format_double(k.cy) + "\n";
    for (const auto& b : f.boxes) {
      m += "box\t" + to_string(b.label) + " " + std::to_string(b.x0) + " " + std::to_string(b.y0) + " " +
           std::to_string(b.x1) + " " + std::to_string(b.y1) + " " + format_double(b.object_height) + "\n";
    }
  }
  write_text(dir / "manifest.tsv", m);
}

std::vector<Frame> read_dataset(const fs::path& dir) {
  const auto bytes = read_bytes(dir / "manifest.tsv");
  std::vector<Frame> frames;
  std::size_t declared = 0;
  bool have_count = false;
  std::size_t pos = 0;
  auto numbers = [](const std::string& text, std::size_t count, std::size_t offset) {
    std::istringstream in(text);
    in.imbue(std::locale::classic());
    std::vector<double> v(count);
    for (auto& x : v) {
      if (!(in >> x)) throw ParseError("expected " + std::to_string(count) + " numbers", offset);
    }
    std::string rest;
    if (in >> rest) throw ParseError("trailing data '" + rest + "'", offset);
    return v;
  };
  while (pos < bytes.size()) {
    const std::size_t line_start = pos;
    std::size_t end = pos;
    while (end < bytes.size() && bytes[end] != '\n') ++end;
    const std::string line(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(end));
    pos = end + 1;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("manifest line without a tab", line_start);
    const std::string key = line.substr(0, tab), value = line.substr(tab + 1);
    const std::size_t value_at = line_start + tab + 1;
    if (key == "format") {
      if (value != "mdset1") throw ParseError("unknown manifest format '" + value + "'", value_at);
    } else if (key == "frames") {
      declared = static_cast<std::size_t>(numbers(value, 1, value_at)[0]);
      have_count = true;
    } else if (key == "frame") {
      if (static_cast<std::size_t>(numbers(value, 1, value_at)[0]) != frames.size()) {
        throw ParseError("frames out of order", value_at);
      }
      frames.emplace_back();
    } else {
      if (frames.empty()) throw ParseError("'" + key + "' before the first frame record", line_start);
      Frame& f = frames.back();
      if (key == "scene") {
        f.scene = static_cast<std::size_t>(numbers(value, 1, value_at)[0]);
      } else if (key == "rgb") {
        f.rgb = read_ppm(dir / value);
      } else if (key == "depth") {
        f.depth = read_pfm(dir / value);
      } else if (key == "pose") {
        const auto v = numbers(value, 12, value_at);
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 3; ++c) f.pose.rotation[r * 3 + c] = v[r * 4 + c];
          f.pose.translation[r] = v[r * 4 + 3];
        }
      } else if (key == "intrinsics") {
        const auto v = numbers(value, 4, value_at);
        f.intrinsics = {v[0], v[1], v[2], v[3]};
      } else if (key == "box") {
        const auto sp = value.find(' ');
        if (sp == std::string::npos) throw ParseError("box needs a class and five numbers", value_at);
        BBox b;
        try {
          b.label = parse_object_class(value.substr(0, sp));
        } catch (const std::invalid_argument& e) {
          throw ParseError(e.what(), value_at);
        }
        const auto v = numbers(value.substr(sp + 1), 5, value_at + sp + 1);
        b.frame_id = frames.size() - 1;
        b.x0 = static_cast<std::size_t>(v[0]);
        b.y0 = static_cast<std::size_t>(v[1]);
        b.x1 = static_cast<std::size_t>(v[2]);
        b.y1 = static_cast<std::size_t>(v[3]);
        b.object_height = v[4];
        f.boxes.push_back(b);
      } else {
        throw ParseError("unknown manifest key '" + key + "'", line_start);
      }
    }
  }
  if (!have_count || declared != frames.size()) {
    throw ParseError("manifest declares " + std::to_string(declared) + " frames, lists " +
                         std::to_string(frames.size()),
                     bytes.size());
  }
  return frames;
}

void Checkpoint::put(const std::string& name, std::vector<std::uint64_t> dims, std::vector<float> values) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  if (n != values.size()) throw ContractError("checkpoint entry '" + name + "': dims do not match value count");
  if (index_.count(name)) throw ContractError("checkpoint entry '" + name + "' already present");
  index_[name] = entries_.size();
  entries_.push_back({name, DType::f32, std::move(dims), std::move(values), {}});
}

void Checkpoint::put_u64(const std::string& name, std::uint64_t value) {
  if (index_.count(name)) throw ContractError("checkpoint entry '" + name + "' already present");
  index_[name] = entries_.size();
  entries_.push_back({name, DType::u64, {1}, {}, {value}});
}

bool Checkpoint::has(const std::string& name) const { return index_.count(name) != 0; }

const CheckpointEntry& Checkpoint::get(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw CheckpointError("checkpoint has no entry '" + name + "'");
  return entries_[it->second];
}

std::uint64_t Checkpoint::get_u64(const std::string& name) const {
  const auto& e = get(name);
  if (e.dtype != DType::u64 || e.u64.size() != 1) throw CheckpointError("entry '" + name + "' is not a u64 scalar");
  return e.u64[0];
}

std::vector<std::uint8_t> Checkpoint::encode() const {
  std::vector<std::uint8_t> payload;
  std::vector<std::uint64_t> offsets;
  for (const auto& e : entries_) {
    offsets.push_back(payload.size());
    if (e.dtype == DType::f32) {
      for (float v : e.f32) put_f32_le(payload, v);
    } else {
      for (auto v : e.u64) put_le(payload, v);
    }
  }
  std::vector<std::uint8_t> out{'M', 'D', 'C', '1'};
  put_le(out, kCheckpointVersion);
  put_le(out, static_cast<std::uint32_t>(entries_.size()));
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    put_le(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    put_le(out, static_cast<std::uint32_t>(e.dtype));
    put_le(out, static_cast<std::uint32_t>(e.dims.size()));
    for (auto d : e.dims) put_le(out, d);
    put_le(out, offsets[i]);
  }
  put_le(out, static_cast<std::uint64_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  put_le(out, static_cast<std::uint32_t>(crc32(0L, payload.data(), static_cast<uInt>(payload.size()))));
  return out;
}

Checkpoint Checkpoint::decode(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n, const char* what) {
    if (bytes.size() - pos < n) throw CheckpointError(std::string("checkpoint truncated reading ") + what);
  };
  need(12, "header");
  if (std::memcmp(bytes.data(), "MDC1", 4) != 0) throw CheckpointError("checkpoint magic is not MDC1");
  const auto version = get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto count = get_le<std::uint32_t>(bytes.data() + 8);
  pos = 12;
  struct Raw {
    std::string name;
    DType dtype;
    std::vector<std::uint64_t> dims;
    std::uint64_t offset;
  };
  std::vector<Raw> raws;
  for (std::uint32_t i = 0; i < count; ++i) {
    need(4, "entry name length");
    const auto len = get_le<std::uint32_t>(bytes.data() + pos);
    pos += 4;
    need(len, "entry name");
    Raw raw;
    raw.name.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
    need(8, "entry dtype");
    const auto dtype = get_le<std::uint32_t>(bytes.data() + pos);
    if (dtype > 1) throw CheckpointError("entry '" + raw.name + "' has unknown dtype " + std::to_string(dtype));
    raw.dtype = static_cast<DType>(dtype);
    const auto rank = get_le<std::uint32_t>(bytes.data() + pos + 4);
    pos += 8;
    need(8ull * rank + 8, "entry dims");
    for (std::uint32_t d = 0; d < rank; ++d) raw.dims.push_back(get_le<std::uint64_t>(bytes.data() + pos + 8 * d));
    pos += 8ull * rank;
    raw.offset = get_le<std::uint64_t>(bytes.data() + pos);
    pos += 8;
    raws.push_back(std::move(raw));
  }
  need(8, "payload size");
  const auto payload_size = get_le<std::uint64_t>(bytes.data() + pos);
  pos += 8;
  need(payload_size + 4, "payload");
  const std::uint8_t* payload = bytes.data() + pos;
  const auto stored_crc = get_le<std::uint32_t>(payload + payload_size);
  const auto crc = static_cast<std::uint32_t>(crc32(0L, payload, static_cast<uInt>(payload_size)));
  if (crc != stored_crc) throw CheckpointError("checkpoint CRC mismatch: payload is corrupt");

  Checkpoint ck;
  std::uint64_t expected_offset = 0;
  for (auto& raw : raws) {
    std::uint64_t n = 1;
    for (auto d : raw.dims) n *= d;
    const std::uint64_t size = n * (raw.dtype == DType::f32 ? 4 : 8);
    if (raw.offset != expected_offset || raw.offset + size > payload_size) {
      throw CheckpointError("entry '" + raw.name + "' has an overlapping or out-of-bounds offset");
    }
    expected_offset += size;
    const std::uint8_t* p = payload + raw.offset;
    if (ck.has(raw.name)) throw CheckpointError("duplicate checkpoint entry '" + raw.name + "'");
    if (raw.dtype == DType::f32) {
      std::vector<float> values(n);
      for (std::uint64_t i = 0; i < n; ++i) values[i] = std::bit_cast<float>(get_le<std::uint32_t>(p + 4 * i));
      ck.put(raw.name, raw.dims, std::move(values));
    } else {
      if (n != 1) throw CheckpointError("entry '" + raw.name + "': only scalar u64 entries are supported");
      ck.put_u64(raw.name, get_le<std::uint64_t>(p));
    }
  }
  if (expected_offset != payload_size) throw CheckpointError("checkpoint payload has trailing bytes");
  return ck;
}

void Checkpoint::save(const fs::path& path) const { write_bytes(path, encode()); }
Checkpoint Checkpoint::load(const fs::path& path) { return decode(read_bytes(path)); }

}  // namespace md
