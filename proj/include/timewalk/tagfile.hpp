#pragma once

#include <filesystem>

#include "timewalk/types.hpp"

namespace tw {

// TTG1 tag file format (all integers little-endian):
//   header, 16 bytes: magic "TTG1" | version u16 (=1) | channel_count u16 |
//                     8 reserved zero bytes
//   records, 16 bytes each: time_ps i64 | channel u16 | flags u16 |
//                     4 reserved zero bytes
// No trailing data. File size is exactly 16 + 16 * record count.

inline constexpr size_t kTagFileHeaderSize = 16;
inline constexpr size_t kTagFileRecordSize = 16;

/// Reads and validates a TTG1 file. Throws FormatError for bad magic,
/// version, reserved bytes or truncation; IntegrityError (naming the first
/// offending record) for ordering or channel-range violations.
TagStream read_tags(const std::filesystem::path& path);

/// Writes a TTG1 file. The stream is validated first; nothing is written if
/// it violates its invariants.
void write_tags(const TagStream& stream, const std::filesystem::path& path);

} // namespace tw
