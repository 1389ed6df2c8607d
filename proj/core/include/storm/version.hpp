#ifndef STORM_VERSION_HPP
#define STORM_VERSION_HPP

namespace storm {
inline constexpr const char* kVersion = "0.1.0";
}

#endif
