// Eigen must come before httplib: <resolv.h> defines a `_res` macro that
// collides with Eigen parameter names.
#include "vsrnav/instruct.hpp"

#include <httplib.h>

#include <json.hpp>

namespace vsrnav {

HttpLanguageModel::HttpLanguageModel(HttpModelConfig config) : config_(std::move(config)) {
  if (config_.url.empty()) throw Error(ErrorKind::InvalidArgument, "language model needs an endpoint url");
}

std::string HttpLanguageModel::complete(const std::string& prompt) {
  httplib::Client client(config_.url);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  if (!config_.token.empty()) client.set_bearer_token_auth(config_.token);

  const nlohmann::json body{{"prompt", prompt}, {"max_tokens", config_.max_tokens}, {"temperature", 0}};
  const auto res = client.Post(config_.path, body.dump(), "application/json");
  if (!res)
    throw Error(ErrorKind::ClientError,
                "language model request to " + config_.url + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw Error(ErrorKind::ClientError, "language model returned HTTP " + std::to_string(res->status));
  try {
    return nlohmann::json::parse(res->body).at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ClientError, std::string("malformed language model response: ") + e.what());
  }
}

}  // namespace vsrnav
