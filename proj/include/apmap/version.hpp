// SPDX-License-Identifier: Apache-2.0

#ifndef APMAP_VERSION_HPP
#define APMAP_VERSION_HPP

namespace apmap {
inline constexpr const char* kVersion = "0.1.0";
}

#endif
