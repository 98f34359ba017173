#pragma once

// Binary network checkpoint, little-endian regardless of host:
//
//   offset 0   5 bytes   magic "GDQN1"
//          5   u32       format version (1)
//          9   u32       number of layer dimensions n
//         13   n x u64   layer dimensions
//          .   f64 ...   for each layer: weights row-major, then biases
//
// The file must end exactly after the last parameter.

#include <cstdint>
#include <string>
#include <vector>

#include "gdqn/nn.hpp"

namespace gdqn {

inline constexpr char kCheckpointMagic[] = "GDQN1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_net(const DenseNet& net);
// Throws ParseError with the failing byte offset.
DenseNet decode_net(const std::vector<std::uint8_t>& bytes);

void write_net_file(const std::string& path, const DenseNet& net);
DenseNet read_net_file(const std::string& path);

}  // namespace gdqn
