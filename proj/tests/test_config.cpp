#include "vsrnav/config.hpp"

#include <doctest.h>

#include <fstream>

#include "vsrnav/error.hpp"

using namespace vsrnav;

namespace {

EnvLookup fake_env(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const std::string& name) -> std::optional<std::string> {
    if (auto it = vars.find(name); it != vars.end()) return it->second;
    return std::nullopt;
  };
}

std::filesystem::path write_file(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("built-in defaults") {
  const Settings s = resolve_settings({}, fake_env({}), std::nullopt);
  CHECK(s.embedder == "synthetic");
  CHECK(s.dimension == 512);
  CHECK(s.noise == doctest::Approx(0.05));
  CHECK(s.llm_url.empty());
  CHECK(s.llm_path == "/complete");
  CHECK(s.timeout_ms == 20000);
}

TEST_CASE("flags beat environment beat defaults file") {
  const auto file = write_file("vsrnav_defaults.yaml", "dimension: 64\nnoise: 0.2\nllm_url: http://file\nllm_max_tokens: 99\n");
  const auto env = fake_env({{"VSRNAV_NOISE", "0.1"}, {"VSRNAV_LLM_URL", "http://env"}});

  const Settings from_file = resolve_settings({}, fake_env({}), file);
  CHECK(from_file.dimension == 64);
  CHECK(from_file.noise == doctest::Approx(0.2));
  CHECK(from_file.llm_url == "http://file");

  const Settings with_env = resolve_settings({}, env, file);
  CHECK(with_env.dimension == 64);  // only the file sets it
  CHECK(with_env.noise == doctest::Approx(0.1));
  CHECK(with_env.llm_url == "http://env");
  CHECK(with_env.llm_max_tokens == 99);

  const Settings with_flags = resolve_settings({{"llm_url", "http://flag"}, {"dimension", "32"}}, env, file);
  CHECK(with_flags.llm_url == "http://flag");
  CHECK(with_flags.dimension == 32);
  CHECK(with_flags.noise == doctest::Approx(0.1));
}

TEST_CASE("every key has an environment variable") {
  std::map<std::string, std::string> vars;
  for (const auto& key : setting_keys()) {
    std::string name = "VSRNAV_" + key;
    for (char& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    vars[name] = key == "embedder" ? "remote" : key == "llm_path" || key.ends_with("url") ? "/x" : "7";
  }
  const Settings s = resolve_settings({}, fake_env(vars), std::nullopt);
  CHECK(s.embedder == "remote");
  CHECK(s.dimension == 7);
  CHECK(s.noise == doctest::Approx(7.0));
  CHECK(s.embed_url == "/x");
  CHECK(s.embed_token == "7");
  CHECK(s.embed_model == "7");
  CHECK(s.llm_url == "/x");
  CHECK(s.llm_path == "/x");
  CHECK(s.llm_token == "7");
  CHECK(s.llm_max_tokens == 7);
  CHECK(s.timeout_ms == 7);
}

TEST_CASE("bad settings are named") {
  const auto none = fake_env({});
  CHECK(kind_of([&] { resolve_settings({{"colour", "red"}}, none, std::nullopt); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { resolve_settings({{"dimension", "12x"}}, none, std::nullopt); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { resolve_settings({{"dimension", "0"}}, none, std::nullopt); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { resolve_settings({{"noise", "-1"}}, none, std::nullopt); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { resolve_settings({{"embedder", "magic"}}, none, std::nullopt); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { resolve_settings({}, fake_env({{"VSRNAV_TIMEOUT_MS", "soon"}}), std::nullopt); }) ==
        ErrorKind::InvalidArgument);

  const auto unknown = write_file("vsrnav_unknown.yaml", "dimensions: 3\n");
  CHECK(kind_of([&] { resolve_settings({}, none, unknown); }) == ErrorKind::InvalidArgument);
  const auto list = write_file("vsrnav_list.yaml", "- 1\n- 2\n");
  CHECK(kind_of([&] { resolve_settings({}, none, list); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { resolve_settings({}, none, std::filesystem::path("/nonexistent/vsrnav.yaml")); }) ==
        ErrorKind::IoError);
  // an empty file means nothing set
  const auto empty = write_file("vsrnav_empty.yaml", "");
  CHECK(resolve_settings({}, none, empty).dimension == 512);
}

TEST_CASE("providers from settings") {
  Settings s;
  s.dimension = 96;
  const auto embedder = make_embedder(s);
  CHECK(embedder->dimension() == 96);
  CHECK(embedder->embed_text("apple").size() == 96);

  CHECK(kind_of([&] { make_language_model(s); }) == ErrorKind::ClientError);
  s.llm_url = "http://127.0.0.1:9";
  CHECK(make_language_model(s) != nullptr);
}
