#include "scorelab/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "scorelab/errors.hpp"

namespace scorelab::cli {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'R', 'P'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>(v >> (8 * i)));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>(v >> (8 * i)));
}

void put_f64(std::string& buf, double d) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64(buf, bits);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (pos + n > buf.size())
      throw ParseError("checkpoint: truncated payload at offset " +
                       std::to_string(pos) + " reading " + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(buf[pos + i]))
           << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(buf[pos + i]))
           << (8 * i);
    pos += 8;
    return v;
  }
  double f64(const char* what) {
    const std::uint64_t bits = u64(what);
    double d = 0.0;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kCheckpointVersion);
  put_u64(buf, ck.tensors.size());
  for (const auto& [name, tensor] : ck.tensors) {
    put_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf.append(name);
    put_u32(buf, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) put_u64(buf, d);
    const double* v = tensor.data();
    for (std::size_t i = 0; i < tensor.size(); ++i) put_f64(buf, v[i]);
  }
  put_u64(buf, ck.config_text.size());
  buf.append(ck.config_text);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("checkpoint: cannot open '" + path + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw ConfigError("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint: cannot open '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  Reader r{buf};

  const std::string magic = r.bytes(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw ParseError("checkpoint: bad magic at offset 0 (expected \"SCRP\")");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion)
    throw ParseError("checkpoint: unsupported version " +
                     std::to_string(version) + " (expected " +
                     std::to_string(kCheckpointVersion) + ")");

  Checkpoint ck;
  const std::uint64_t count = r.u64("tensor count");
  for (std::uint64_t ti = 0; ti < count; ++ti) {
    const std::uint32_t name_len = r.u32("name length");
    std::string name = r.bytes(name_len, "name");
    const std::uint32_t rank = r.u32("rank");
    std::vector<std::size_t> shape(rank);
    std::size_t total = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(r.u64("dim"));
      total *= d;
    }
    std::vector<double> values(total);
    for (auto& v : values) v = r.f64("value");
    ck.tensors.emplace_back(std::move(name),
                            numcore::Tensor(std::move(shape),
                                            std::move(values)));
  }
  const std::uint64_t cfg_len = r.u64("config length");
  ck.config_text = r.bytes(cfg_len, "config text");
  if (r.pos != buf.size())
    throw ParseError("checkpoint: trailing bytes at offset " +
                     std::to_string(r.pos));
  return ck;
}

}  // namespace scorelab::cli
