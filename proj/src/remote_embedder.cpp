// Eigen must come before httplib: <resolv.h> defines a `_res` macro that
// collides with Eigen parameter names.
#include "vsrnav/embed.hpp"
#include "vsrnav/error.hpp"

#include <httplib.h>

#include <cmath>
#include <json.hpp>

namespace vsrnav {

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {
  if (config_.url.empty()) throw Error(ErrorKind::InvalidArgument, "remote embedder needs an endpoint url");
  if (config_.dimension == 0) throw Error(ErrorKind::InvalidArgument, "remote embedder dimension must be positive");
}

Embedding RemoteEmbedder::embed_text(std::string_view text) const {
  if (tokenize(text).empty()) throw Error(ErrorKind::EmptyText, "text has no words");
  nlohmann::json body{{"kind", "text"}, {"text", std::string(text)}};
  if (!config_.model.empty()) body["model"] = config_.model;
  return request(body.dump());
}

Embedding RemoteEmbedder::embed_image(std::string_view bytes) const {
  nlohmann::json body{{"kind", "image"}, {"image_b64", httplib::detail::base64_encode(std::string(bytes))}};
  if (!config_.model.empty()) body["model"] = config_.model;
  return request(body.dump());
}

Embedding RemoteEmbedder::embed_object(const ObjectDescriptor& object) const {
  if (!object.image.empty()) return embed_image(object.image);
  return embed_text(object.label);
}

Embedding RemoteEmbedder::request(const std::string& body) const {
  httplib::Client client(config_.url);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  if (!config_.token.empty()) client.set_bearer_token_auth(config_.token);

  const auto res = client.Post("/embed", body, "application/json");
  if (!res)
    throw Error(ErrorKind::Timeout, "embedding request to " + config_.url + " failed: " + httplib::to_string(res.error()));
  if (res->status == 401 || res->status == 403)
    throw Error(ErrorKind::Unauthorized, "embedding service rejected the credentials");
  if (res->status != 200) throw Error(ErrorKind::BadResponse, "embedding service returned HTTP " + std::to_string(res->status));

  Embedding v;
  try {
    const auto doc = nlohmann::json::parse(res->body);
    const auto& vec = doc.at("vector");
    if (!vec.is_array()) throw Error(ErrorKind::BadResponse, "'vector' is not an array");
    if (doc.contains("dim") && doc["dim"].get<std::size_t>() != vec.size())
      throw Error(ErrorKind::BadResponse, "'dim' disagrees with the vector length");
    for (const auto& x : vec) v.push_back(static_cast<float>(x.get<double>()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadResponse, std::string("malformed embedding response: ") + e.what());
  }
  if (v.size() != config_.dimension)
    throw Error(ErrorKind::BadResponse, "expected " + std::to_string(config_.dimension) + " components, got " +
                                            std::to_string(v.size()));
  for (float x : v)
    if (!std::isfinite(x)) throw Error(ErrorKind::BadResponse, "embedding contains non-finite values");
  try {
    normalize(v);
  } catch (const Error&) {
    throw Error(ErrorKind::BadResponse, "embedding is the zero vector");
  }
  return v;
}

}  // namespace vsrnav
