#include "manga/context.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>


#include "manga/errors.hpp"

namespace manga {
namespace {

constexpr const char* kSep = "<SEP>";
constexpr const char* kJoiner = " <SEP> ";

void check_index(const std::vector<TextUnit>& texts, int n, const char* who) {
  if (n < 0 || std::size_t(n) >= texts.size()) {
    throw ConfigError(std::string(who) + ": text index out of range");
  }
}

std::string trim(const std::string& s) {
  const char* ws = " \t\n\r";
  const std::size_t first = s.find_first_not_of(ws);
  if (first == std::string::npos) return "";
  const std::size_t last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

bool is_control_token(const std::string& tok) {
  return tok.size() >= 2 && tok.front() == '<' && tok.back() == '>';
}

}  // namespace

std::string build_input_2p2(const std::vector<TextUnit>& texts, int n) {
  check_index(texts, n, "build_input_2p2");
  if (n == 0) return texts[0].content;
  return texts[std::size_t(n) - 1].content + kJoiner + texts[std::size_t(n)].content;
}

SceneInput build_input_scene(const std::vector<TextUnit>& texts, int n) {
  check_index(texts, n, "build_input_scene");
  const std::optional<int> scene = texts[std::size_t(n)].scene;
  SceneInput out;
  int member = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].scene != scene) continue;
    if (member > 0) out.input += kJoiner;
    out.input += texts[i].content;
    if (int(i) == n) out.slot = member;
    ++member;
  }
  return out;
}

SceneInput build_input_scene_visual(const std::vector<TextUnit>& texts, int n,
                                    const SceneTagSet& tags) {
  SceneInput out = build_input_scene(texts, n);
  std::vector<std::string> tokens;
  tokens.reserve(tags.tags.size());
  for (const std::string& tag : tags.tags) {
    std::string up = tag;
    std::transform(up.begin(), up.end(), up.begin(),
                   [](unsigned char c) { return char(std::toupper(c)); });
    tokens.push_back("<" + up + ">");
  }
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());

  std::string prefix;
  for (const std::string& tok : tokens) prefix += tok + " ";
  out.input = prefix + out.input;
  return out;
}

DictTranslator DictTranslator::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EngineFailure("cannot open word table: " + path);
  std::map<std::string, std::string> mapping;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw EngineFailure("word table line " + std::to_string(line_no) + " has no tab: " + path);
    }
    mapping[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return DictTranslator(std::move(mapping));
}

std::string DictTranslator::translate(const std::string& input) {
  std::string out;
  out.reserve(input.size());
  std::size_t pos = 0;
  while (pos <= input.size()) {
    std::size_t next = input.find(' ', pos);
    if (next == std::string::npos) next = input.size();
    const std::string token = input.substr(pos, next - pos);
    if (is_control_token(token) || token.empty()) {
      out += token;
    } else {
      const auto it = mapping_.find(token);
      out += it != mapping_.end() ? it->second : token;
    }
    if (next == input.size()) break;
    out += ' ';
    pos = next + 1;
  }
  return out;
}

SplitResult split_output(const std::string& output, int slot) {
  if (slot < 0) throw ConfigError("split_output: negative slot");
  if (trim(output).empty()) throw EmptyOutput("translation engine returned an empty string");

  std::vector<std::string> segments;
  std::size_t pos = 0;
  while (true) {
    const std::size_t hit = output.find(kSep, pos);
    if (hit == std::string::npos) {
      segments.push_back(trim(output.substr(pos)));
      break;
    }
    segments.push_back(trim(output.substr(pos, hit - pos)));
    pos = hit + 5;
  }

  if (std::size_t(slot) < segments.size()) return {segments[std::size_t(slot)], false};
  return {segments.back(), true};
}

std::string strip_leading_tags(const std::string& s) {
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t start = s.find_first_not_of(" \t\n\r", pos);
    if (start == std::string::npos) return "";
    std::size_t end = s.find_first_of(" \t\n\r", start);
    if (end == std::string::npos) end = s.size();
    const std::string token = s.substr(start, end - start);
    if (is_control_token(token) && token != kSep) {
      pos = end;
      continue;
    }
    return s.substr(start);
  }
  return "";
}

}  // namespace manga
