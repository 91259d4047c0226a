#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "snnw/part_network.hpp"

namespace snnw {

// Model file layout, all integers and floats little-endian:
//   "SNNW"  u16 version
//   u32 part-id byte length, part-id UTF-8 bytes
//   spec:   u32 rows, u32 cols, u32 channels,
//           u32 conv block count, per block (u32 filters, u32 kernel),
//           u32 dense count, per layer u32 width, f64 dropout rate
//   meta:   u64 seed, u32 epochs run, i32 best epoch,
//           f32 best val accuracy, f32 best val loss, f32 final train loss
//   u64 parameter count, then f32 parameters in declaration order
inline constexpr char kModelMagic[4] = {'S', 'N', 'N', 'W'};
inline constexpr std::uint16_t kModelVersion = 1;

class ModelFileError : public std::runtime_error {
public:
    enum class Kind { io, not_a_model, version_mismatch, truncated, corrupt, part_mismatch };

    ModelFileError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

std::vector<std::uint8_t> serialize_model(const TrainedPartNetwork& net);
TrainedPartNetwork deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const TrainedPartNetwork& net, const std::filesystem::path& path);

/// When `expected_part` is given, a model for any other part is rejected with
/// Kind::part_mismatch.
TrainedPartNetwork load_model(const std::filesystem::path& path,
                              const std::optional<PartId>& expected_part = std::nullopt);

}  // namespace snnw
