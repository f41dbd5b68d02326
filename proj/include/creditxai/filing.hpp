#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "creditxai/ratings.hpp"

namespace creditxai {

struct FilingDocument {
  CompanyYearKey key;
  std::string source_uri;
  std::string raw_text;
};

struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct FilingItem {
  std::string item_id;  // canonical, upper-case letter suffix: "1", "1A", "7A"
  std::string title;
  std::string body;     // exact slice raw_text[span.start, span.end)
  CharSpan span;
  bool stub = false;

  friend bool operator==(const FilingItem&, const FilingItem&) = default;
};

inline constexpr std::size_t kDefaultMinBodyChars = 200;

// The fourteen 10-K items used when no item set is configured.
const std::vector<std::string>& default_key_items();

// "item 1a" / "1a" / "1A" -> "1A". Throws InvalidArgument on anything else.
std::string canonical_item_id(std::string_view text);

// Splits a 10-K's plain text into items. Headers look like "Item 7." or
// "ITEM 1A:" at the start of a line. When an item id occurs more than once
// (table of contents followed by the body) the occurrence with the longest
// following body wins. Throws NoItemsFound when no header matches and
// PreconditionViolation on empty text.
std::vector<FilingItem> parse_filing(const FilingDocument& doc,
                                     std::size_t min_body_chars = kDefaultMinBodyChars);

struct KeyItemSelection {
  std::map<std::string, FilingItem> items;
  std::set<std::string> missing;
};

// Throws AllItemsMissing when no wanted id is available and InvalidArgument
// when wanted is empty.
KeyItemSelection select_key_items(const std::vector<FilingItem>& items,
                                  const std::set<std::string>& wanted);

// Removes tags and entities, collapses whitespace runs to single spaces and
// keeps paragraph breaks as "\n\n". Idempotent.
std::string strip_markup(std::string_view raw);

}  // namespace creditxai
