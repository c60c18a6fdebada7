#pragma once

#include <string>
#include <string_view>

namespace storycascade {

/// "http://host:8080/v1/vote" -> {"http://host:8080", "/v1/vote"}.
struct SplitUrl {
  std::string origin;
  std::string path;
};

/// Throws std::invalid_argument for anything other than http(s)://host[:port][/path].
SplitUrl split_url(std::string_view url);

}  // namespace storycascade
