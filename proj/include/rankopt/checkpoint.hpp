#pragma once

#include "rankopt/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <string_view>

namespace rankopt {

// Layout:
//   "RANKOPT1\n"
//   layer widths as space-separated decimal integers, then "\n"
//   every weight as a little-endian IEEE-754 binary64, in flat-vector order
inline constexpr std::string_view kCheckpointMagic = "RANKOPT1";

void write_checkpoint(std::ostream& out, const Model& model);
Model read_checkpoint(std::istream& in);  // throws DataError

void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace rankopt
