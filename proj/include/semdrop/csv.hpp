#pragma once

#include <filesystem>
#include <string>

#include "semdrop/types.hpp"

namespace semdrop {

// Dataset CSV format: header `id,x_1..x_k,y_1..y_t`, one row per subject,
// missing cells as the literal token NA.
LongitudinalDataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const std::filesystem::path& path, const LongitudinalDataset& ds);

// Serializes a double so that parsing it back recovers the exact value.
std::string format_double(double v);

// Writes content to a temporary file in the target directory, then renames it
// into place.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace semdrop
