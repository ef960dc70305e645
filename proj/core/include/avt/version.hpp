#pragma once

#include <string_view>

namespace avt {

std::string_view version();

}  // namespace avt
