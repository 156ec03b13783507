#include "vsrnav/embed.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>

#include "vsrnav/error.hpp"

namespace vsrnav {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combination
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Box-Muller on raw 53-bit uniforms, so sequences do not depend on the
// standard library's distribution implementation.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}
  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::vector<double> gaussian_vector(Gaussian& g, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = g();
  return v;
}

Embedding to_unit(const std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double n = std::sqrt(sq);
  Embedding out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / n);
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

ConceptVocabulary::ConceptVocabulary(std::vector<ConceptSpec> specs, std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension < 2) throw Error(ErrorKind::InvalidArgument, "vocabulary dimension must be at least 2");
  if (specs.empty()) throw Error(ErrorKind::InvalidArgument, "vocabulary needs at least one concept");
  Gaussian g(mix(seed, 0x636f6e63657074ull));
  for (auto& spec : specs) {
    if (spec.name.empty()) throw Error(ErrorKind::InvalidArgument, "concept name is empty");
    if (find(spec.name)) throw Error(ErrorKind::InvalidArgument, "duplicate concept '" + spec.name + "'");
    if (std::find(spec.synonyms.begin(), spec.synonyms.end(), spec.name) == spec.synonyms.end())
      spec.synonyms.insert(spec.synonyms.begin(), spec.name);
    Embedding v;
    for (int attempt = 0;; ++attempt) {
      if (attempt == 1000)
        throw Error(ErrorKind::InvalidArgument, "cannot separate concept '" + spec.name + "' in " +
                                                    std::to_string(dimension) + " dimensions");
      v = to_unit(gaussian_vector(g, dimension));
      bool separated = true;
      for (const auto& c : concepts_)
        if (dot(c.vector, v) >= kMaxPairCosine) separated = false;
      if (separated) break;
    }
    concepts_.push_back({spec.name, spec.synonyms, std::move(v)});
  }
}

const Concept* ConceptVocabulary::find(std::string_view name) const {
  for (const auto& c : concepts_)
    if (c.name == name) return &c;
  for (const auto& c : concepts_)
    if (std::find(c.synonyms.begin(), c.synonyms.end(), name) != c.synonyms.end()) return &c;
  return nullptr;
}

std::vector<ConceptSpec> ConceptVocabulary::default_concepts() {
  return {
      {"apple", {"red apple"}},
      {"coke can", {"black coke can", "soda can", "cola can", "coke", "cola"}},
      {"wooden desk", {"desk", "table", "wooden table", "work desk"}},
      {"dustbin", {"trash can", "garbage bin", "waste bin", "trash bin", "bin"}},
      {"banana", {"bananas"}},
      {"orange", {"tangerine"}},
      {"water bottle", {"bottle", "plastic bottle"}},
      {"coffee mug", {"mug", "cup", "coffee cup"}},
      {"book", {"notebook", "novel"}},
      {"laptop", {"computer", "notebook computer"}},
      {"keyboard", {"computer keyboard"}},
      {"computer mouse", {"mouse"}},
      {"chair", {"office chair", "stool"}},
      {"shelf", {"bookshelf", "storage shelf", "shelves", "storage"}},
      {"cabinet", {"cupboard", "chest", "drawer", "chest of drawers"}},
      {"sofa", {"couch"}},
      {"potted plant", {"plant", "flower pot", "houseplant"}},
      {"lamp", {"desk lamp", "light"}},
      {"backpack", {"bag", "schoolbag", "rucksack"}},
      {"scissors", {"pair of scissors"}},
      {"stapler", {"paper stapler"}},
      {"tennis ball", {"ball"}},
      {"teddy bear", {"toy bear", "stuffed animal", "teddy"}},
      {"remote control", {"remote", "tv remote"}},
      {"door", {"doorway", "exit"}},
      {"picture frame", {"photo frame", "frame"}},
  };
}

std::vector<ConceptSpec> ConceptVocabulary::lab_concepts() {
  auto specs = default_concepts();
  specs.push_back({"printer", {"copier", "printing machine"}});
  specs.push_back({"whiteboard", {"white board", "board"}});
  specs.push_back({"sink", {"washbasin", "basin"}});
  specs.push_back({"refrigerator", {"fridge"}});
  return specs;
}

SyntheticEmbedder::SyntheticEmbedder(ConceptVocabulary vocabulary, double noise)
    : vocab_(std::move(vocabulary)), noise_(noise) {
  if (noise < 0.0 || !std::isfinite(noise)) throw Error(ErrorKind::InvalidArgument, "noise must be >= 0");
  for (std::size_t c = 0; c < vocab_.concepts().size(); ++c)
    for (const auto& s : vocab_.concepts()[c].synonyms) phrases_.push_back({tokenize(s), c});
  std::stable_sort(phrases_.begin(), phrases_.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
}

Embedding SyntheticEmbedder::embed_text(std::string_view text) const {
  const std::vector<std::string> tokens = tokenize(text);
  if (tokens.empty()) throw Error(ErrorKind::EmptyText, "text has no words");
  const std::size_t dim = dimension();
  std::vector<double> sum(dim, 0.0);
  for (std::size_t i = 0; i < tokens.size();) {
    std::size_t used = 0;
    for (const auto& [words, index] : phrases_) {
      if (words.empty() || i + words.size() > tokens.size()) continue;
      if (!std::equal(words.begin(), words.end(), tokens.begin() + static_cast<long>(i))) continue;
      const Embedding& v = vocab_.concepts()[index].vector;
      for (std::size_t k = 0; k < dim; ++k) sum[k] += v[k];
      used = words.size();
      break;
    }
    if (used == 0) {
      Gaussian g(mix(vocab_.seed(), fnv1a(tokens[i])));
      const Embedding v = to_unit(gaussian_vector(g, dim));
      for (std::size_t k = 0; k < dim; ++k) sum[k] += kUnmatchedWeight * v[k];
      used = 1;
    }
    i += used;
  }
  return to_unit(sum);
}

Embedding SyntheticEmbedder::embed_object(const ObjectDescriptor& object) const {
  const Concept* c = vocab_.find(object.label);
  if (!c) throw Error(ErrorKind::UnknownLabel, "label '" + object.label + "' is not in the vocabulary");
  const std::size_t dim = dimension();
  std::vector<double> v(c->vector.begin(), c->vector.end());
  if (noise_ > 0.0) {
    Gaussian g(mix(mix(vocab_.seed(), fnv1a(c->name)), object.seed));
    const double scale = noise_ / std::sqrt(static_cast<double>(dim));
    for (auto& x : v) x += scale * g();
  }
  return to_unit(v);
}

}  // namespace vsrnav
