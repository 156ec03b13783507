#include "vsrnav/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "vsrnav/error.hpp"

namespace vsrnav {

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys{"embedder", "dimension", "noise",    "embed_url",      "embed_token",
                                             "embed_model", "llm_url", "llm_path", "llm_token", "llm_max_tokens",
                                             "timeout_ms"};
  return keys;
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    T v{};
    if constexpr (std::is_floating_point_v<T>)
      v = static_cast<T>(std::stod(text, &used));
    else
      v = static_cast<T>(std::stoll(text, &used));
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::InvalidArgument, "setting '" + key + "' is not a number: '" + text + "'");
}

void apply(Settings& s, const std::string& key, const std::string& value) {
  if (key == "embedder") {
    if (value != "synthetic" && value != "remote")
      throw Error(ErrorKind::InvalidArgument, "embedder must be 'synthetic' or 'remote', got '" + value + "'");
    s.embedder = value;
  } else if (key == "dimension") {
    const long long d = parse_number<long long>(key, value);
    if (d < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be positive");
    s.dimension = static_cast<std::size_t>(d);
  } else if (key == "noise") {
    s.noise = parse_number<double>(key, value);
    if (!(s.noise >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise must be >= 0");
  } else if (key == "embed_url") {
    s.embed_url = value;
  } else if (key == "embed_token") {
    s.embed_token = value;
  } else if (key == "embed_model") {
    s.embed_model = value;
  } else if (key == "llm_url") {
    s.llm_url = value;
  } else if (key == "llm_path") {
    s.llm_path = value;
  } else if (key == "llm_token") {
    s.llm_token = value;
  } else if (key == "llm_max_tokens") {
    s.llm_max_tokens = parse_number<int>(key, value);
  } else if (key == "timeout_ms") {
    s.timeout_ms = parse_number<int>(key, value);
    if (s.timeout_ms < 1) throw Error(ErrorKind::InvalidArgument, "timeout_ms must be positive");
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown setting '" + key + "'");
  }
}

std::string env_name(const std::string& key) {
  std::string n = "VSRNAV_" + key;
  for (char& c : n) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return n;
}

}  // namespace

Settings resolve_settings(const std::map<std::string, std::string>& flags, const EnvLookup& env,
                          const std::optional<std::filesystem::path>& defaults_file) {
  std::map<std::string, std::string> merged;
  if (defaults_file) {
    YAML::Node doc;
    try {
      doc = YAML::LoadFile(defaults_file->string());
    } catch (const YAML::Exception& e) {
      throw Error(ErrorKind::IoError, defaults_file->string() + ": " + e.what());
    }
    if (doc && !doc.IsNull()) {
      if (!doc.IsMap()) throw Error(ErrorKind::InvalidArgument, defaults_file->string() + ": expected a map of settings");
      for (const auto& kv : doc) merged[kv.first.as<std::string>()] = kv.second.as<std::string>();
    }
  }
  for (const auto& key : setting_keys())
    if (env)
      if (auto v = env(env_name(key))) merged[key] = *v;
  for (const auto& [key, value] : flags) merged[key] = value;

  Settings s;
  for (const auto& [key, value] : merged) apply(s, key, value);
  return s;
}

std::unique_ptr<EmbeddingProvider> make_embedder(const Settings& s) {
  if (s.embedder == "remote") {
    return std::make_unique<RemoteEmbedder>(RemoteEmbedderConfig{s.embed_url, s.embed_token, s.embed_model, s.dimension,
                                                                 std::chrono::milliseconds(s.timeout_ms)});
  }
  return std::make_unique<SyntheticEmbedder>(ConceptVocabulary(ConceptVocabulary::lab_concepts(), s.dimension),
                                             s.noise);
}

std::unique_ptr<LanguageModelClient> make_language_model(const Settings& s) {
  if (s.llm_url.empty())
    throw Error(ErrorKind::ClientError, "no language model endpoint configured (set llm_url or VSRNAV_LLM_URL)");
  return std::make_unique<HttpLanguageModel>(
      HttpModelConfig{s.llm_url, s.llm_path, s.llm_token, s.llm_max_tokens, std::chrono::milliseconds(s.timeout_ms)});
}

}  // namespace vsrnav
