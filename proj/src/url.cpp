#include <storycascade/url.hpp>

#include <stdexcept>

namespace storycascade {

SplitUrl split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw std::invalid_argument("URL without scheme: " + std::string(url));
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw std::invalid_argument("unsupported URL scheme: " + std::string(scheme));
  }
  const auto rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  const auto host = rest.substr(0, slash);
  if (host.empty()) throw std::invalid_argument("URL without host: " + std::string(url));
  SplitUrl out;
  out.origin = std::string(scheme) + "://" + std::string(host);
  out.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  return out;
}

}  // namespace storycascade
