#include "relmatch/vrr/split.hpp"

namespace relmatch::vrr {

// The 164 semantic relation predicates, in the published order.
const std::vector<std::string>& builtin_predicate_phrases() {
  static const std::vector<std::string> phrases = {
    "adorning", "appearing in", "approaching", "are attached to", "are sitting on", "attached", "attached to",
    "attached to a", "balancing on", "biting", "boarding", "bordering", "built into", "catching", "chasing",
    "coming out of", "crashing on", "decorating", "displayed on", "displaying", "draped over", "drawn on",
    "dressed in", "drinking from", "driving", "driving down", "driving on", "eating from", "entering", "filled with",
    "floating in", "floating on", "flying", "flying a", "flying above", "flying in", "flying over", "flying through",
    "going down", "grabbing", "grazing", "grazing in", "grazing on", "gripping", "hanging", "hanging above",
    "hanging from", "hanging in", "hanging off", "hanging on", "hanging on a", "hanging out of", "hanging over",
    "hangs from", "hangs on", "hits", "hitting", "hung on", "jumping", "jumping on", "laying", "laying in",
    "laying on", "laying on a", "leaning on", "leaning over", "licking", "looking out", "lying in", "lying inside",
    "lying next to", "lying on", "lying on top of", "marking", "mounted on", "mounted to", "moving", "overlooking",
    "painted", "painted on", "petting", "playing", "playing in", "playing on", "playing with", "plays", "pointing",
    "printed on", "reflected in", "reflected on", "reflecting", "reflecting in", "reflecting off", "reflecting on",
    "resting on", "running in", "running on", "securing", "selling", "served on", "serving", "sewn on", "sits in",
    "sits on", "sitting", "sitting at", "sitting behind", "sitting in", "sitting in a", "sitting inside",
    "sitting near", "sitting next to", "sitting on", "sitting on a", "sitting with", "skiing", "skiing down",
    "skiing in", "skiing on", "sleeping on", "sniffing", "stacked on", "standing inside", "standing near",
    "standing with", "sticking out", "sticking out of", "stopped at", "stuck in", "stuck on", "supporting",
    "supports", "surfing", "surfing in", "surfing on", "swimming in", "swinging", "swinging a", "swings",
    "talking on", "talking to", "tied around", "tied to", "touching", "waiting at", "waiting on", "walking",
    "walking across", "walking along", "walking behind", "walking down", "walking in", "walking near",
    "walking next to", "walking on", "walking on a", "walking through", "walking to", "walking up", "walking with",
    "working on", "wrapped around", "wrapped in", "written on",
  };
  return phrases;
}

}  // namespace relmatch::vrr
