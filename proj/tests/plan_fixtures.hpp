#pragma once

// Plan listings and a generator of random well-formed plans.

#include <random>
#include <string>
#include <vector>

#include "vsrnav/instruct.hpp"

namespace oracle {

using vsrnav::AtomicAction;
using vsrnav::Plan;
using vsrnav::PlanSource;
using vsrnav::Verb;

inline const char* const kCokeResponse =
    "navigate(``black coke can\")\n"
    "pick(``black coke can\")\n"
    "navigate(``appropriate storage location\")\n"
    "place(``black coke can\")\n"
    "done()\n";

inline const char* const kApplePlanLine =
    "1. navigate(``apple\"), 2. pick(``apple\"), 3. navigate(``wooden desk\"), 4. place(``apple\"), 5. done().";

inline Plan apple_plan(PlanSource source = PlanSource::Llm) {
  return {{{Verb::Navigate, "apple"},
           {Verb::Pick, "apple"},
           {Verb::Navigate, "wooden desk"},
           {Verb::Place, "apple"},
           {Verb::Done, ""}},
          source};
}

// The same plan as laid out in the prompt, label and line breaks included.
inline const char* const kApplePlanListing =
    "Plan: 1. navigate(``apple\"), 2. pick(``apple\"), \n3. navigate(``wooden desk\"), 4. place(``apple\"), \n5. done(). ";

// Random valid plans: navigate/pick/place blocks in a legal order.
inline Plan random_plan(std::mt19937_64& rng) {
  static const std::vector<std::string> words{"apple", "wooden", "desk", "black", "coke", "can", "table", "red",
                                              "children's", "book", "mug", "left", "shelf", "O'Brien's", "bin"};
  auto phrase = [&] {
    std::string s = words[rng() % words.size()];
    for (int extra = static_cast<int>(rng() % 3); extra > 0; --extra) s += " " + words[rng() % words.size()];
    return s;
  };
  Plan p;
  p.source = rng() % 2 ? PlanSource::Llm : PlanSource::Rule;
  bool navigated = false, holding = false;
  const int steps = 1 + static_cast<int>(rng() % 8);
  for (int i = 0; i < steps; ++i) {
    const int pick = static_cast<int>(rng() % 3);
    if (pick == 1 && navigated && !holding) {
      p.actions.push_back({Verb::Pick, phrase()});
      holding = true;
    } else if (pick == 2 && holding) {
      p.actions.push_back({Verb::Place, phrase()});
      holding = false;
    } else {
      p.actions.push_back({Verb::Navigate, phrase()});
      navigated = true;
    }
  }
  p.actions.push_back({Verb::Done, ""});
  return p;
}

}  // namespace oracle
