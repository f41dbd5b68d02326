#include "creditxai/filing.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>

#include "creditxai/errors.hpp"

namespace creditxai {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

struct HeaderHit {
  std::string item_id;
  std::string title;
  std::size_t header_start = 0;
  std::size_t body_start = 0;
};

const std::regex& header_pattern() {
  // Separator: '.', ':', '-', en dash or em dash (UTF-8).
  static const std::regex re(R"(^[ \t]*item[ \t]+(\d{1,2}[a-z]?)[ \t]*(\.|:|-|\xE2\x80\x93|\xE2\x80\x94)(.*)$)",
                             std::regex::icase | std::regex::optimize);
  return re;
}

std::vector<HeaderHit> find_headers(const std::string& text) {
  std::vector<HeaderHit> hits;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    const std::size_t line_end = eol == std::string::npos ? text.size() : eol;
    const std::size_t next = eol == std::string::npos ? text.size() : eol + 1;
    std::string line = text.substr(pos, line_end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_match(line, m, header_pattern())) {
      HeaderHit hit;
      hit.item_id = canonical_item_id(m[1].str());
      std::string title = m[3].str();
      auto b = std::find_if_not(title.begin(), title.end(), is_space);
      auto e = std::find_if_not(title.rbegin(), title.rend(), is_space).base();
      hit.title = b < e ? std::string(b, e) : std::string();
      hit.header_start = pos;
      hit.body_start = next;
      hits.push_back(std::move(hit));
    }
    pos = next;
  }
  return hits;
}

CharSpan trim_span(const std::string& text, std::size_t start, std::size_t end) {
  while (start < end && is_space(text[start])) ++start;
  while (end > start && is_space(text[end - 1])) --end;
  return {start, end};
}

// One pass of markup removal. strip_markup iterates this to a fixed point.
std::string remove_tags(std::string_view in) {
  static const char* kBlockTags[] = {"p",  "br", "div", "tr", "li", "h1", "h2",    "h3",
                                     "h4", "h5", "h6",  "table", "ul", "ol", "hr", "section"};
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const char c = in[i];
    const bool tag_start = c == '<' && i + 1 < in.size() &&
                           (std::isalpha(static_cast<unsigned char>(in[i + 1])) || in[i + 1] == '/' ||
                            in[i + 1] == '!' || in[i + 1] == '?');
    const std::size_t close = tag_start ? in.find('>', i) : std::string_view::npos;
    if (close == std::string_view::npos) {
      out.push_back(c);
      ++i;
      continue;
    }
    std::size_t n = i + 1;
    if (n < close && in[n] == '/') ++n;
    std::string name;
    while (n < close && std::isalnum(static_cast<unsigned char>(in[n]))) {
      name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(in[n]))));
      ++n;
    }
    std::size_t resume = close + 1;
    if ((name == "script" || name == "style") && in[i + 1] != '/') {
      const std::string closing = "</" + name;
      std::string lower(in.substr(resume));
      std::transform(lower.begin(), lower.end(), lower.begin(),
                     [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
      const std::size_t end_tag = lower.find(closing);
      if (end_tag != std::string::npos) {
        const std::size_t gt = in.find('>', resume + end_tag);
        resume = gt == std::string_view::npos ? in.size() : gt + 1;
      } else {
        resume = in.size();
      }
    }
    const bool block = std::any_of(std::begin(kBlockTags), std::end(kBlockTags),
                                   [&](const char* t) { return name == t; });
    if (block) out += "\n\n";
    i = resume;
  }
  return out;
}

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::optional<std::string> decode_entity(std::string_view name) {
  if (name == "nbsp" || name == "#160" || name == "#xa0" || name == "#xA0") return " ";
  if (name == "amp") return "&";
  if (name == "lt") return "<";
  if (name == "gt") return ">";
  if (name == "quot") return "\"";
  if (name == "apos") return "'";
  if (name == "rsquo" || name == "lsquo") return "'";
  if (name == "rdquo" || name == "ldquo") return "\"";
  if (name == "mdash") return "\xE2\x80\x94";
  if (name == "ndash") return "\xE2\x80\x93";
  if (name.size() >= 2 && name[0] == '#') {
    unsigned long cp = 0;
    try {
      if (name[1] == 'x' || name[1] == 'X') {
        cp = std::stoul(std::string(name.substr(2)), nullptr, 16);
      } else {
        cp = std::stoul(std::string(name.substr(1)), nullptr, 10);
      }
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (cp == 0 || cp > 0x10FFFF) return std::nullopt;
    std::string out;
    append_utf8(out, cp);
    return out;
  }
  return std::nullopt;
}

std::string decode_entities(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i] == '&') {
      const std::size_t semi = in.find(';', i + 1);
      if (semi != std::string_view::npos && semi - i <= 10) {
        if (auto decoded = decode_entity(in.substr(i + 1, semi - i - 1))) {
          out += *decoded;
          i = semi + 1;
          continue;
        }
      }
    }
    out.push_back(in[i]);
    ++i;
  }
  return out;
}

std::string collapse_whitespace(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (!is_space(in[i])) {
      out.push_back(in[i]);
      ++i;
      continue;
    }
    int newlines = 0;
    while (i < in.size() && is_space(in[i])) {
      if (in[i] == '\n') ++newlines;
      ++i;
    }
    out += newlines >= 2 ? "\n\n" : " ";
  }
  const auto b = out.find_first_not_of(" \n");
  if (b == std::string::npos) return {};
  const auto e = out.find_last_not_of(" \n");
  return out.substr(b, e - b + 1);
}

std::string strip_once(std::string_view raw) {
  return collapse_whitespace(decode_entities(remove_tags(raw)));
}

}  // namespace

const std::vector<std::string>& default_key_items() {
  static const std::vector<std::string> items = {"1", "1A", "1B", "2",  "3",  "4",  "5",
                                                 "7", "7A", "8",  "9A", "10", "11", "13"};
  return items;
}

std::string canonical_item_id(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (!is_space(c)) s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  if (s.rfind("ITEM", 0) == 0) s = s.substr(4);
  static const std::regex re(R"(^(\d{1,2})([A-Z]?)$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw InvalidArgument("not an item id: '" + std::string(text) + "'");
  // Drop leading zeros so "07" and "7" agree.
  return std::to_string(std::stoi(m[1].str())) + m[2].str();
}

std::vector<FilingItem> parse_filing(const FilingDocument& doc, std::size_t min_body_chars) {
  const std::string& text = doc.raw_text;
  if (text.empty()) throw PreconditionViolation("filing " + doc.source_uri + " has empty text");

  const std::vector<HeaderHit> hits = find_headers(text);
  if (hits.empty()) {
    throw NoItemsFound("no 10-K item headers found in " +
                       (doc.source_uri.empty() ? doc.key.label() : doc.source_uri));
  }

  // Longest following body per item id; earliest occurrence wins ties.
  std::map<std::string, std::pair<std::size_t, CharSpan>> best;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const std::size_t end = i + 1 < hits.size() ? hits[i + 1].header_start : text.size();
    const CharSpan span = trim_span(text, std::min(hits[i].body_start, end), end);
    auto it = best.find(hits[i].item_id);
    if (it == best.end() || span.size() > it->second.second.size()) {
      best[hits[i].item_id] = {i, span};
    }
  }

  std::vector<FilingItem> items;
  items.reserve(best.size());
  for (const auto& [id, choice] : best) {
    const auto& [hit_index, span] = choice;
    FilingItem item;
    item.item_id = id;
    item.title = hits[hit_index].title;
    item.span = span;
    item.body = text.substr(span.start, span.size());
    item.stub = item.body.size() < min_body_chars;
    items.push_back(std::move(item));
  }
  std::sort(items.begin(), items.end(),
            [](const FilingItem& a, const FilingItem& b) { return a.span.start < b.span.start; });
  return items;
}

KeyItemSelection select_key_items(const std::vector<FilingItem>& items,
                                  const std::set<std::string>& wanted) {
  if (wanted.empty()) throw InvalidArgument("wanted item set is empty");
  KeyItemSelection sel;
  for (const FilingItem& item : items) {
    if (wanted.count(item.item_id)) sel.items.emplace(item.item_id, item);
  }
  for (const std::string& id : wanted) {
    if (!sel.items.count(id)) sel.missing.insert(id);
  }
  if (sel.items.empty()) throw AllItemsMissing("none of the wanted items are present");
  return sel;
}

std::string strip_markup(std::string_view raw) {
  std::string current = strip_once(raw);
  // Each changing pass shortens the text or only rewrites whitespace, so the
  // fixed point is reached in a handful of passes.
  for (;;) {
    std::string next = strip_once(current);
    if (next == current) return current;
    current = std::move(next);
  }
}

}  // namespace creditxai
