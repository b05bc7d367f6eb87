#include "timewalk/tagfile.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <vector>

namespace tw {

namespace {

constexpr std::array<unsigned char, 4> kMagic = {0x54, 0x54, 0x47, 0x31}; // "TTG1"
constexpr uint16_t kVersion = 1;

void put_u16(unsigned char* p, uint16_t v) {
  p[0] = static_cast<unsigned char>(v & 0xff);
  p[1] = static_cast<unsigned char>(v >> 8);
}

void put_i64(unsigned char* p, int64_t v) {
  auto u = static_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
}

uint16_t get_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

int64_t get_i64(const unsigned char* p) {
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(p[i]) << (8 * i);
  return static_cast<int64_t>(u);
}

} // namespace

TagStream read_tags(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tag file: " + path.string());

  unsigned char header[kTagFileHeaderSize];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(header)))
    throw FormatError(path.string() + ": truncated header");
  if (std::memcmp(header, kMagic.data(), kMagic.size()) != 0)
    throw FormatError(path.string() + ": bad magic, not a TTG1 file");
  uint16_t version = get_u16(header + 4);
  if (version != kVersion)
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  for (size_t i = 8; i < kTagFileHeaderSize; ++i) {
    if (header[i] != 0)
      throw FormatError(path.string() + ": nonzero reserved header bytes");
  }

  TagStream stream;
  stream.channel_count = get_u16(header + 6);

  std::vector<unsigned char> buf(kTagFileRecordSize * 4096);
  size_t index = 0;
  TimeTag prev{};
  bool have_prev = false;
  for (;;) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    auto got = static_cast<size_t>(in.gcount());
    if (got == 0) break;
    if (got % kTagFileRecordSize != 0)
      throw FormatError(path.string() + ": trailing partial record");
    for (size_t off = 0; off < got; off += kTagFileRecordSize, ++index) {
      const unsigned char* p = buf.data() + off;
      TimeTag tag;
      tag.time_ps = get_i64(p);
      tag.channel = get_u16(p + 8);
      tag.flags = get_u16(p + 10);
      if (p[12] | p[13] | p[14] | p[15])
        throw FormatError(path.string() + ": nonzero reserved bytes in record " +
                          std::to_string(index));
      if (tag.channel >= stream.channel_count)
        throw IntegrityError(path.string() + ": record " + std::to_string(index) +
                             " channel out of range");
      if (have_prev && tag_less(tag, prev))
        throw IntegrityError(path.string() + ": record " + std::to_string(index) +
                             " breaks time ordering");
      prev = tag;
      have_prev = true;
      stream.tags.push_back(tag);
    }
    if (!in) break;
  }
  return stream;
}

void write_tags(const TagStream& stream, const std::filesystem::path& path) {
  validate_stream(stream); // refuse before touching the file

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());

  unsigned char header[kTagFileHeaderSize] = {};
  std::memcpy(header, kMagic.data(), kMagic.size());
  put_u16(header + 4, kVersion);
  put_u16(header + 6, stream.channel_count);
  out.write(reinterpret_cast<const char*>(header), sizeof(header));

  std::vector<unsigned char> buf;
  buf.reserve(kTagFileRecordSize * 4096);
  for (const TimeTag& tag : stream.tags) {
    unsigned char rec[kTagFileRecordSize] = {};
    put_i64(rec, tag.time_ps);
    put_u16(rec + 8, tag.channel);
    put_u16(rec + 10, tag.flags);
    buf.insert(buf.end(), rec, rec + sizeof(rec));
    if (buf.size() == buf.capacity()) {
      out.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  if (!buf.empty())
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

} // namespace tw
