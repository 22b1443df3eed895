#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "fps/errors.hpp"

namespace fps {

// Substitute {name} placeholders in a single pass. Unknown or unterminated
// placeholders throw; substituted values are taken verbatim.
inline std::string render_prompt(std::string_view text,
                                 const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '{') {
      out.push_back(text[i++]);
      continue;
    }
    const auto close = text.find('}', i);
    if (close == std::string_view::npos)
      throw ConfigError("prompt template: unterminated placeholder");
    const std::string name(text.substr(i + 1, close - i - 1));
    const auto it = values.find(name);
    if (it == values.end())
      throw ConfigError("prompt template: unknown placeholder {" + name + "}");
    out += it->second;
    i = close + 1;
  }
  return out;
}

// The chat prompt texts driving the LLM backend. Loadable from a directory
// of UTF-8 text files so the wording can be changed without rebuilding.
struct PromptLibrary {
  std::string summarize;             // {topic}, {messages}
  std::string integrate;             // {long_memory}, {short_memory}, {char_cap}
  std::string opinion;               // {trait}, {education}, {previous_opinion},
                                     // {long_memory}, {topic}
  std::string opinion_no_reasoning;  // same, without the reasoning request

  static PromptLibrary builtin() {
    PromptLibrary lib;
    lib.summarize =
        "Today you heard the following messages about {topic}:\n"
        "{messages}\n"
        "\n"
        "Summarize the opinions you have heard in a few sentences, including "
        "whether or not they believe in the news.\n";
    lib.integrate =
        "Recap of your previous long-term memory:\n"
        "{long_memory}\n"
        "\n"
        "Today's short-term summary:\n"
        "{short_memory}\n"
        "\n"
        "Please update the long-term memory by integrating today's summary with "
        "the existing long-term memory, ensuring to maintain continuity and add "
        "any new insights. Keep the updated memory under {char_cap} characters.\n";
    lib.opinion =
        "You are simulating a real person with {trait} and {education} education.\n"
        "Given your previous personal opinion \"{previous_opinion}\" and the new "
        "information in your long memory:\n"
        "{long_memory}\n"
        "\n"
        "Update your opinion about the news that {topic}. Compose a tweet "
        "expressing your opinion. Use 0 for disbelief and 1 for belief to "
        "indicate your opinion. Provide reasoning behind your tweet and explain "
        "the rationale for your belief.\n"
        "Answer exactly in this format:\n"
        "Belief: <0 or 1>\n"
        "Tweet: <your tweet, at most 560 characters>\n"
        "Reasoning: <your rationale>\n";
    lib.opinion_no_reasoning =
        "You are simulating a real person with {trait} and {education} education.\n"
        "Given your previous personal opinion \"{previous_opinion}\" and the new "
        "information in your long memory:\n"
        "{long_memory}\n"
        "\n"
        "Update your opinion about the news that {topic}. Compose a tweet "
        "expressing your opinion. Use 0 for disbelief and 1 for belief to "
        "indicate your opinion.\n"
        "Answer exactly in this format:\n"
        "Belief: <0 or 1>\n"
        "Tweet: <your tweet, at most 560 characters>\n";
    return lib;
  }

  static PromptLibrary load_from_dir(const std::filesystem::path& dir) {
    const auto read = [&dir](const char* filename) {
      const auto path = dir / filename;
      std::ifstream in(path);
      if (!in) throw ConfigError("prompt template not readable: " + path.string());
      std::ostringstream buffer;
      buffer << in.rdbuf();
      return buffer.str();
    };
    PromptLibrary lib;
    lib.summarize = read("summarize.txt");
    lib.integrate = read("integrate.txt");
    lib.opinion = read("opinion.txt");
    lib.opinion_no_reasoning = read("opinion_no_reasoning.txt");
    return lib;
  }
};

}  // namespace fps
