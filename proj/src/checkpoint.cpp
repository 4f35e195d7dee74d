#include "checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "crc32.hpp"
#include "error.hpp"

namespace vcore {

namespace {

constexpr char kMagic[6] = {'V', 'C', 'K', 'P', 'T', '1'};

void append_u32(std::string& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.append(b, 4);
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

  std::uint32_t u32() {
    require(4);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
    pos_ += 4;
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }

  std::string str(std::size_t n) {
    require(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::vector<double> doubles(std::size_t n) {
    require(n * sizeof(double));
    std::vector<double> v(n);
    std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void require(std::size_t n) {
    if (bytes_.size() - pos_ < n) {
      throw TruncationError("checkpoint '" + path_ + "' is truncated");
    }
  }
  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint make_checkpoint(const RunConfig& config, const ParameterStore& store) {
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.config_text = config.to_text();
  for (const auto& [name, entry] : store.entries()) {
    ckpt.params.emplace_back(name, entry.value);
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  append_u32(out, static_cast<std::uint32_t>(ckpt.config_text.size()));
  out += ckpt.config_text;
  append_u32(out, static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& [name, value] : ckpt.params) {
    append_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    append_u32(out, static_cast<std::uint32_t>(value.rank()));
    for (std::size_t a = 0; a < value.rank(); ++a) {
      append_u32(out, static_cast<std::uint32_t>(value.extent(a)));
    }
    out.append(reinterpret_cast<const char*>(value.data()), value.size() * sizeof(double));
  }
  append_u32(out, crc32(out.data(), out.size()));

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write to '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw VersionError("'" + path + "' is not a VCKPT1 checkpoint");
  }

  Reader r(bytes, path);
  r.str(sizeof(kMagic));
  Checkpoint ckpt;
  ckpt.config_text = r.str(r.u32());
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (std::uint32_t a = 0; a < rank; ++a) {
      shape[a] = r.u32();
      n *= shape[a];
    }
    ckpt.params.emplace_back(name, DenseArray(std::move(shape), r.doubles(n)));
  }
  if (r.remaining() < 4) throw TruncationError("checkpoint '" + path + "' is truncated");
  const std::size_t body = r.pos();
  Reader tail(bytes, path);
  tail.str(body);
  const std::uint32_t stored = tail.u32();
  if (tail.remaining() != 0) {
    throw ValidationError("checkpoint '" + path + "' has trailing bytes");
  }
  if (stored != crc32(bytes.data(), body)) {
    throw ChecksumError("checkpoint '" + path + "' failed its CRC check");
  }
  ckpt.config = RunConfig::from_text(ckpt.config_text);
  return ckpt;
}

void apply_checkpoint(const Checkpoint& ckpt, Model& model) {
  ParameterStore& store = model.params();
  if (ckpt.params.size() != store.count()) {
    throw ValidationError("checkpoint: parameter count mismatch (" +
                          std::to_string(ckpt.params.size()) + " vs " +
                          std::to_string(store.count()) + ")");
  }
  for (const auto& [name, value] : ckpt.params) {
    if (!store.has(name)) throw ValidationError("checkpoint: unexpected parameter '" + name + "'");
    DenseArray& dst = store.value(name);
    if (!dst.same_shape(value)) {
      throw ValidationError("checkpoint: shape mismatch for '" + name + "': " +
                            value.shape_string() + " vs " + dst.shape_string());
    }
    dst = value;
  }
}

}  // namespace vcore
