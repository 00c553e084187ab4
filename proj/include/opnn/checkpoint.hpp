#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "opnn/module.hpp"

namespace opnn {

/// Flat binary checkpoint container.
///
///   "OPNN1"                       5 bytes magic
///   u16  version                  currently 1
///   u32  section count
///   per section:
///     u16 name length, name bytes
///     u32 layer count
///     per layer: u8 type tag, u32 q, u8 rank, rank x u32 shape
///   parameter blocks, little-endian float32, in manifest order
///
/// All integers are little-endian. Loading checks the manifest against the
/// receiving network and requires the byte length to match exactly.
inline constexpr char kCheckpointMagic[5] = {'O', 'P', 'N', 'N', '1'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointSection {
  std::string name;
  Module<float>* module;
};

std::vector<std::uint8_t> encode_checkpoint(const std::vector<CheckpointSection>& sections);
void decode_checkpoint(const std::vector<std::uint8_t>& bytes, const std::vector<CheckpointSection>& sections,
                       const std::string& origin = "<memory>");

void save_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointSection>& sections);
void load_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointSection>& sections);

}  // namespace opnn
