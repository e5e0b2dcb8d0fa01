#pragma once

// Text persistence for MixtureModel.
//
//   MFGMIX v1
//   K D S
//   w_0 ... w_{K-1}
//   pi_0^0(0) ... pi_0^0(S-1)        (K*D lines, k-major then d)
//
// Reals are written with 17 significant digits, so a round trip is exact.

#include <filesystem>
#include <iosfwd>

#include "mfgmix/core.hpp"

namespace mfgmix {

inline constexpr const char* kModelFormatTag = "MFGMIX v1";

void save_model(const MixtureModel& model, std::ostream& out);
void save_model(const MixtureModel& model, const std::filesystem::path& path);

MixtureModel load_model(std::istream& in);
MixtureModel load_model(const std::filesystem::path& path);

}  // namespace mfgmix
