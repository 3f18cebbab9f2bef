#include "rwcp/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string_view>

#include "rwcp/error.hpp"

namespace rwcp {

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;

enum class DType { F4, F8, U1 };

struct Header {
  DType dtype;
  std::vector<std::size_t> shape;
  std::size_t payload_offset;
};

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::F4: return 4;
    case DType::F8: return 8;
    case DType::U1: return 1;
  }
  return 0;
}

// Extracts the value text following 'key': in a python dict literal.
std::string_view dict_value(std::string_view dict, std::string_view key, const std::string& path) {
  std::string quoted = "'" + std::string(key) + "'";
  auto pos = dict.find(quoted);
  if (pos == std::string_view::npos) {
    throw Error(ErrorKind::MalformedFile, path + ": header lacks " + quoted);
  }
  pos = dict.find(':', pos + quoted.size());
  if (pos == std::string_view::npos) throw Error(ErrorKind::MalformedFile, path + ": bad header");
  ++pos;
  while (pos < dict.size() && dict[pos] == ' ') ++pos;
  return dict.substr(pos);
}

Header parse_header(const std::string& bytes, const std::string& path) {
  if (bytes.size() < 10 || bytes.compare(0, kMagicLen, kMagic, kMagicLen) != 0) {
    throw Error(ErrorKind::MalformedFile, path + ": missing NPY magic");
  }
  const auto major = static_cast<unsigned char>(bytes[6]);
  std::size_t header_len = 0;
  std::size_t prefix = 0;
  if (major == 1) {
    header_len = static_cast<unsigned char>(bytes[8]) |
                 (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
    prefix = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) throw Error(ErrorKind::MalformedFile, path + ": truncated header");
    std::uint32_t len = 0;
    std::memcpy(&len, bytes.data() + 8, 4);
    header_len = len;
    prefix = 12;
  } else {
    throw Error(ErrorKind::MalformedFile, path + ": unsupported NPY version " +
                                              std::to_string(major));
  }
  if (bytes.size() < prefix + header_len) {
    throw Error(ErrorKind::MalformedFile, path + ": truncated header");
  }
  std::string_view dict(bytes.data() + prefix, header_len);

  Header h{};
  auto descr = dict_value(dict, "descr", path);
  if (descr.size() < 5 || descr[0] != '\'') {
    throw Error(ErrorKind::MalformedFile, path + ": bad descr");
  }
  auto descr_end = descr.find('\'', 1);
  if (descr_end == std::string_view::npos) {
    throw Error(ErrorKind::MalformedFile, path + ": bad descr");
  }
  auto d = descr.substr(1, descr_end - 1);
  if (d == "<f4") {
    h.dtype = DType::F4;
  } else if (d == "<f8") {
    h.dtype = DType::F8;
  } else if (d == "|u1" || d == "<u1" || d == "|b1") {
    h.dtype = DType::U1;
  } else {
    throw Error(ErrorKind::ShapeMismatch, path + ": unsupported dtype " + std::string(d));
  }

  auto fortran = dict_value(dict, "fortran_order", path);
  if (fortran.starts_with("True")) {
    throw Error(ErrorKind::ShapeMismatch, path + ": fortran-ordered arrays are not supported");
  }
  if (!fortran.starts_with("False")) {
    throw Error(ErrorKind::MalformedFile, path + ": bad fortran_order");
  }

  auto shape = dict_value(dict, "shape", path);
  if (shape.empty() || shape[0] != '(') throw Error(ErrorKind::MalformedFile, path + ": bad shape");
  auto close = shape.find(')');
  if (close == std::string_view::npos) throw Error(ErrorKind::MalformedFile, path + ": bad shape");
  std::string dims(shape.substr(1, close - 1));
  std::stringstream ss(dims);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto first = item.find_first_not_of(' ');
    if (first == std::string::npos) continue;
    try {
      std::size_t used = 0;
      auto v = std::stoull(item.substr(first), &used);
      h.shape.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw Error(ErrorKind::MalformedFile, path + ": bad shape entry '" + item + "'");
    }
  }
  h.payload_offset = prefix + header_len;
  return h;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

template <class T>
std::vector<T> decode_payload(const std::string& bytes, const Header& h, std::size_t count,
                              const std::string& path) {
  const std::size_t need = count * dtype_size(h.dtype);
  if (bytes.size() < h.payload_offset + need) {
    throw Error(ErrorKind::MalformedFile, path + ": payload shorter than shape implies");
  }
  const char* p = bytes.data() + h.payload_offset;
  std::vector<T> out(count);
  switch (h.dtype) {
    case DType::F4:
      for (std::size_t i = 0; i < count; ++i) {
        float f;
        std::memcpy(&f, p + 4 * i, 4);
        out[i] = static_cast<T>(f);
      }
      break;
    case DType::F8:
      for (std::size_t i = 0; i < count; ++i) {
        double f;
        std::memcpy(&f, p + 8 * i, 8);
        out[i] = static_cast<T>(f);
      }
      break;
    case DType::U1:
      for (std::size_t i = 0; i < count; ++i) out[i] = static_cast<T>(static_cast<unsigned char>(p[i]));
      break;
  }
  return out;
}

std::string make_header(const char* descr, const std::vector<std::size_t>& shape) {
  std::string dict = "{'descr': '";
  dict += descr;
  dict += "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dict += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) dict += ", ";
  }
  dict += "), }";
  // Pad so that magic + version + length + dict is a multiple of 64, newline-terminated.
  std::size_t total = kMagicLen + 4 + dict.size() + 1;
  dict.append((64 - total % 64) % 64, ' ');
  dict += '\n';
  std::string out(kMagic, kMagicLen);
  out += '\x01';
  out += '\x00';
  const auto len = static_cast<std::uint16_t>(dict.size());
  out += static_cast<char>(len & 0xff);
  out += static_cast<char>(len >> 8);
  out += dict;
  return out;
}

template <class T>
void append_raw(std::string& out, const T* data, std::size_t count) {
  out.append(reinterpret_cast<const char*>(data), count * sizeof(T));
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::IoFailure, "short write to " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::IoFailure, "cannot rename into " + path.string());
  }
}

Tensor load_tensor(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  const std::string name = path.string();
  const Header h = parse_header(bytes, name);

  if (h.shape.size() == 2) {
    const std::size_t count = h.shape[0] * h.shape[1];
    if (h.dtype == DType::U1) {
      auto v = decode_payload<std::uint8_t>(bytes, h, count, name);
      return BinaryMask(h.shape[0], h.shape[1], std::move(v));
    }
    auto v = decode_payload<double>(bytes, h, count, name);
    try {
      return ProbMap(h.shape[0], h.shape[1], std::move(v));
    } catch (const Error& e) {
      throw Error(e.kind(), name + ": " + e.what());
    }
  }
  if (h.shape.size() == 3 && h.dtype != DType::U1) {
    const std::size_t count = h.shape[0] * h.shape[1] * h.shape[2];
    auto v = decode_payload<float>(bytes, h, count, name);
    FeatureMap fm(h.shape[0], h.shape[1], h.shape[2], std::move(v));
    if (auto z = fm.first_zero_vector(); z != fm.num_pixels()) {
      throw Error(ErrorKind::ZeroVector, name + ": all-zero feature vector at pixel " +
                                             std::to_string(z));
    }
    return fm;
  }
  throw Error(ErrorKind::ShapeMismatch,
              name + ": unsupported rank " + std::to_string(h.shape.size()) + " for its dtype");
}

namespace {

template <class T>
T load_as(const std::filesystem::path& path, const char* what) {
  auto t = load_tensor(path);
  if (auto* v = std::get_if<T>(&t)) return std::move(*v);
  throw Error(ErrorKind::ShapeMismatch, path.string() + ": expected " + what);
}

}  // namespace

ProbMap load_prob_map(const std::filesystem::path& path) {
  return load_as<ProbMap>(path, "a float H x W probability map");
}

FeatureMap load_feature_map(const std::filesystem::path& path) {
  return load_as<FeatureMap>(path, "a float H x W x d feature map");
}

BinaryMask load_mask(const std::filesystem::path& path) {
  return load_as<BinaryMask>(path, "a uint8 H x W mask");
}

void save_tensor(const ProbMap& grid, const std::filesystem::path& path) {
  std::string out = make_header("<f4", {grid.height(), grid.width()});
  std::vector<float> f(grid.values().begin(), grid.values().end());
  append_raw(out, f.data(), f.size());
  write_file_atomic(path, out);
}

void save_tensor(const FeatureMap& grid, const std::filesystem::path& path) {
  std::string out = make_header("<f4", {grid.height(), grid.width(), grid.dim()});
  append_raw(out, grid.data().data(), grid.data().size());
  write_file_atomic(path, out);
}

void save_tensor(const BinaryMask& grid, const std::filesystem::path& path) {
  std::string out = make_header("|u1", {grid.height(), grid.width()});
  append_raw(out, grid.values().data(), grid.values().size());
  write_file_atomic(path, out);
}

void save_tensor(const Tensor& grid, const std::filesystem::path& path) {
  std::visit([&](const auto& g) { save_tensor(g, path); }, grid);
}

}  // namespace rwcp
