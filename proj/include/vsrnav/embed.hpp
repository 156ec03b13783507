#pragma once

// Embedding providers: text and observed objects mapped to unit vectors whose
// dot product measures semantic similarity.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vsrnav/vsr.hpp"

namespace vsrnav {

struct ObjectDescriptor {
  std::string label;         // ground-truth concept label (simulator)
  std::uint64_t seed = 0;    // per-view noise seed
  std::string image;         // raw image bytes, used by remote providers when present
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  /// Throws EmptyText for blank input.
  virtual Embedding embed_text(std::string_view text) const = 0;
  virtual Embedding embed_object(const ObjectDescriptor& object) const = 0;
};

struct ConceptSpec {
  std::string name;
  std::vector<std::string> synonyms;  // the name itself is always a synonym
};

struct Concept {
  std::string name;
  std::vector<std::string> synonyms;
  Embedding vector;
};

class ConceptVocabulary {
 public:
  static constexpr double kMaxPairCosine = 0.3;

  /// Draws one seeded unit vector per concept, rejecting draws whose cosine
  /// to an earlier concept reaches kMaxPairCosine.
  ConceptVocabulary(std::vector<ConceptSpec> specs, std::size_t dimension = kDefaultDimension,
                    std::uint64_t seed = 7);

  /// 26 everyday desk/room concepts.
  static std::vector<ConceptSpec> default_concepts();
  /// default_concepts plus four room fixtures, enough for 20 objects and 10 locations.
  static std::vector<ConceptSpec> lab_concepts();

  std::size_t dimension() const { return dimension_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Concept>& concepts() const { return concepts_; }
  const Concept* find(std::string_view name) const;

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
  std::vector<Concept> concepts_;
};

/// Deterministic stand-in for real encoders. Text: every synonym phrase
/// found (longest first) adds its concept vector with weight 1, every other
/// token a hash-seeded vector with weight 0.1. Objects: the concept vector
/// plus seeded Gaussian noise of expected norm `noise`.
class SyntheticEmbedder : public EmbeddingProvider {
 public:
  static constexpr double kUnmatchedWeight = 0.1;

  explicit SyntheticEmbedder(ConceptVocabulary vocabulary, double noise = 0.05);

  std::size_t dimension() const override { return vocab_.dimension(); }
  Embedding embed_text(std::string_view text) const override;
  /// Throws UnknownLabel when the label is not a concept name or synonym.
  Embedding embed_object(const ObjectDescriptor& object) const override;

  const ConceptVocabulary& vocabulary() const { return vocab_; }
  double noise() const { return noise_; }

 private:
  ConceptVocabulary vocab_;
  double noise_;
  std::vector<std::pair<std::vector<std::string>, std::size_t>> phrases_;  // longest first
};

struct RemoteEmbedderConfig {
  std::string url;    // e.g. http://127.0.0.1:8089
  std::string token;  // bearer token, optional
  std::string model;  // pinned model identifier sent with every request
  std::size_t dimension = kDefaultDimension;
  std::chrono::milliseconds timeout{5000};
};

/// POST {url}/embed with {"kind","text"|"image_b64","model"}; expects
/// {"dim", "vector"}. Throws Timeout, Unauthorized or BadResponse.
class RemoteEmbedder : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);

  std::size_t dimension() const override { return config_.dimension; }
  Embedding embed_text(std::string_view text) const override;
  Embedding embed_object(const ObjectDescriptor& object) const override;
  Embedding embed_image(std::string_view bytes) const;

 private:
  Embedding request(const std::string& body) const;
  RemoteEmbedderConfig config_;
};

/// Lowercase alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace vsrnav
