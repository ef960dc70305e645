#pragma once

#include <filesystem>
#include <string>

#include <avt/io.hpp>

namespace avt::testing {

inline std::filesystem::path fixture_path(const std::string& relative) {
  return std::filesystem::path(AVT_FIXTURE_DIR) / relative;
}

inline HmmModel fixture_model(const std::string& name) { return load_model(fixture_path("models/" + name + ".json")); }

}  // namespace avt::testing
