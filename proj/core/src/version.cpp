#include "avt/version.hpp"

namespace avt {

std::string_view version() { return AVT_VERSION_STRING; }

}  // namespace avt
