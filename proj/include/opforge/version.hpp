#pragma once

namespace opforge {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr int kModelFormatVersion = 1;

}  // namespace opforge
