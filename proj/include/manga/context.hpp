#pragma once

#include <map>
#include <string>
#include <vector>

#include "manga/page.hpp"

namespace manga {

// Translation inputs are built from TextUnits already sorted into reading
// order; the functions below trust vector order and never re-sort.

// Current text preceded by its predecessor: "t_{n-1} <SEP> t_n"; the first
// text of a page has no predecessor and is returned alone. The predecessor
// may belong to a different scene.
std::string build_input_2p2(const std::vector<TextUnit>& texts, int n);

struct SceneInput {
  std::string input;
  int slot = 0;  // <SEP>-separated segment holding text n
};

// Every text sharing text n's scene, joined in reading order with <SEP>.
SceneInput build_input_scene(const std::vector<TextUnit>& texts, int n);

// Scene input with the scene's semantic tags prepended as space-separated
// <UPPERCASE> tokens. The slot still counts text segments: tag tokens live
// inside the first segment. An empty tag set reproduces the plain scene
// input byte for byte.
SceneInput build_input_scene_visual(const std::vector<TextUnit>& texts, int n,
                                    const SceneTagSet& tags);

class TranslatorInterface {
 public:
  virtual ~TranslatorInterface() = default;
  virtual std::string translate(const std::string& input) = 0;
};

// Identity engine; useful for exercising the pipeline without a model.
class EchoTranslator final : public TranslatorInterface {
 public:
  std::string translate(const std::string& input) override { return input; }
};

// Word-for-word substitution over space-separated tokens. Control tokens of
// the form <...> and words missing from the table pass through unchanged.
class DictTranslator final : public TranslatorInterface {
 public:
  explicit DictTranslator(std::map<std::string, std::string> mapping)
      : mapping_(std::move(mapping)) {}

  // Loads a two-column tab-separated UTF-8 table (word TAB replacement).
  // Throws EngineFailure when the file is unreadable or a non-empty line
  // lacks a tab.
  static DictTranslator from_file(const std::string& path);

  std::string translate(const std::string& input) override;

 private:
  std::map<std::string, std::string> mapping_;
};

struct SplitResult {
  std::string text;
  bool degraded = false;  // engine produced fewer segments than expected
};

// Picks the slot-th <SEP>-separated segment of an engine output, whitespace
// trimmed. When the engine returned fewer segments than the slot requires,
// the last segment is returned with `degraded` set. Throws EmptyOutput when
// the output is empty or whitespace.
SplitResult split_output(const std::string& output, int slot);

// Drops leading space-separated <...> tokens, e.g. the tag prefix of a
// scene+visual segment, leaving the bare text.
std::string strip_leading_tags(const std::string& s);

}  // namespace manga
