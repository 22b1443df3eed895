#pragma once

#include <string>

namespace fps {

// Speaker id carried by official refutation messages. The official agent is
// not part of the population and never updates an opinion.
inline constexpr int kOfficialSpeakerId = -1;

enum class MessageKind { peer, official };

// One heard opinion. Official messages always carry belief 0.
struct Message {
  int speaker_id = 0;
  int belief = 0;
  std::string tweet;
  MessageKind kind = MessageKind::peer;

  bool operator==(const Message&) const = default;
};

inline Message make_official_message(std::string tweet) {
  return Message{kOfficialSpeakerId, 0, std::move(tweet), MessageKind::official};
}

}  // namespace fps
