#pragma once

// Runtime settings for the CLI and server. Each key can come from a flag, an
// environment variable VSRNAV_<KEY> (upper case), or a YAML defaults file;
// earlier sources win.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "vsrnav/embed.hpp"
#include "vsrnav/instruct.hpp"

namespace vsrnav {

struct Settings {
  std::string embedder = "synthetic";  // synthetic | remote
  std::size_t dimension = kDefaultDimension;
  double noise = 0.05;
  std::string embed_url;
  std::string embed_token;
  std::string embed_model;
  std::string llm_url;
  std::string llm_path = "/complete";
  std::string llm_token;
  int llm_max_tokens = 256;
  int timeout_ms = 20000;
};

/// Keys understood by resolve_settings, in Settings field order.
const std::vector<std::string>& setting_keys();

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// The process environment.
std::optional<std::string> process_env(const std::string& name);

/// Flags > environment > defaults file > built-in defaults. The defaults file
/// is a flat YAML map of the same keys. Throws InvalidArgument for unknown
/// keys or malformed values, IoError for an unreadable file.
Settings resolve_settings(const std::map<std::string, std::string>& flags, const EnvLookup& env,
                          const std::optional<std::filesystem::path>& defaults_file);

/// Synthetic embedder over the lab vocabulary, or the remote client.
std::unique_ptr<EmbeddingProvider> make_embedder(const Settings& settings);

/// HTTP client for the configured endpoint; throws ClientError when the
/// endpoint is not set.
std::unique_ptr<LanguageModelClient> make_language_model(const Settings& settings);

}  // namespace vsrnav
