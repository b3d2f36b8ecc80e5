#include "drylab/util/xml.hpp"

#include <cctype>

#include "drylab/errors.hpp"

namespace drylab::util {

std::string XmlNode::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes)
    if (k == key) return v;
  return {};
}

const XmlNode* XmlNode::child(std::string_view target) const {
  for (const auto& c : children)
    if (c.name == target) return &c;
  return nullptr;
}

std::vector<const XmlNode*> XmlNode::children_named(std::string_view target) const {
  std::vector<const XmlNode*> out;
  for (const auto& c : children)
    if (c.name == target) out.push_back(&c);
  return out;
}

const XmlNode* XmlNode::find(std::string_view target) const {
  if (name == target) return this;
  for (const auto& c : children) {
    if (c.is_text()) continue;
    if (const XmlNode* hit = c.find(target)) return hit;
  }
  return nullptr;
}

std::vector<const XmlNode*> XmlNode::find_all(std::string_view target) const {
  std::vector<const XmlNode*> out;
  if (name == target) out.push_back(this);
  for (const auto& c : children) {
    if (c.is_text()) continue;
    auto sub = c.find_all(target);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

std::string XmlNode::inner_text() const {
  if (is_text()) return text;
  std::string out;
  for (const auto& c : children) out += c.inner_text();
  return out;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view input) : in_(input) {}

  XmlNode parse_document() {
    skip_misc();
    if (eof()) fail("document has no root element");
    XmlNode root = parse_element();
    skip_misc();
    if (!eof()) fail("trailing content after root element");
    return root;
  }

 private:
  std::string_view in_;
  size_t pos_ = 0;

  bool eof() const { return pos_ >= in_.size(); }
  char peek() const { return in_[pos_]; }
  bool starts_with(std::string_view s) const { return in_.substr(pos_, s.size()) == s; }

  [[noreturn]] void fail(const std::string& why) const {
    throw DocumentError("XML parse error at offset " + std::to_string(pos_) + ": " + why);
  }

  void skip_whitespace() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  void expect(std::string_view s) {
    if (!starts_with(s)) fail("expected '" + std::string(s) + "'");
    pos_ += s.size();
  }

  void skip_until(std::string_view terminator) {
    size_t hit = in_.find(terminator, pos_);
    if (hit == std::string_view::npos) fail("unterminated '" + std::string(terminator) + "'");
    pos_ = hit + terminator.size();
  }

  // Prolog, comments, PIs, DOCTYPE, whitespace between top-level items.
  void skip_misc() {
    for (;;) {
      skip_whitespace();
      if (starts_with("<?")) {
        skip_until("?>");
      } else if (starts_with("<!--")) {
        skip_until("-->");
      } else if (starts_with("<!DOCTYPE")) {
        skip_doctype();
      } else {
        return;
      }
    }
  }

  void skip_doctype() {
    expect("<!DOCTYPE");
    int bracket_depth = 0;
    while (!eof()) {
      char c = peek();
      ++pos_;
      if (c == '[') ++bracket_depth;
      if (c == ']') --bracket_depth;
      if (c == '>' && bracket_depth <= 0) return;
    }
    fail("unterminated DOCTYPE");
  }

  std::string parse_name() {
    size_t start = pos_;
    while (!eof()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
          c == ':' || c == '.')
        ++pos_;
      else
        break;
    }
    if (pos_ == start) fail("expected a name");
    return std::string(in_.substr(start, pos_ - start));
  }

  std::string decode_entities(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size();) {
      if (raw[i] != '&') {
        out += raw[i++];
        continue;
      }
      size_t semi = raw.find(';', i);
      if (semi == std::string_view::npos) fail("unterminated entity");
      std::string_view ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "amp") out += '&';
      else if (ent == "lt") out += '<';
      else if (ent == "gt") out += '>';
      else if (ent == "quot") out += '"';
      else if (ent == "apos") out += '\'';
      else if (!ent.empty() && ent[0] == '#') {
        long code = 0;
        try {
          code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                     ? std::stol(std::string(ent.substr(2)), nullptr, 16)
                     : std::stol(std::string(ent.substr(1)));
        } catch (...) {
          fail("bad numeric entity");
        }
        append_utf8(out, static_cast<unsigned long>(code));
      } else {
        fail("unknown entity '&" + std::string(ent) + ";'");
      }
      i = semi + 1;
    }
    return out;
  }

  static void append_utf8(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  std::string parse_attribute_value() {
    if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
    char quote = peek();
    ++pos_;
    size_t start = pos_;
    size_t end = in_.find(quote, pos_);
    if (end == std::string_view::npos) fail("unterminated attribute value");
    pos_ = end + 1;
    return decode_entities(in_.substr(start, end - start));
  }

  XmlNode parse_element() {
    expect("<");
    XmlNode node;
    node.name = parse_name();
    for (;;) {
      skip_whitespace();
      if (eof()) fail("unterminated start tag");
      if (starts_with("/>")) {
        pos_ += 2;
        return node;
      }
      if (peek() == '>') {
        ++pos_;
        break;
      }
      std::string attr_name = parse_name();
      skip_whitespace();
      expect("=");
      skip_whitespace();
      node.attributes.emplace_back(std::move(attr_name), parse_attribute_value());
    }
    parse_content(node);
    return node;
  }

  void parse_content(XmlNode& node) {
    std::string pending_text;
    auto flush_text = [&] {
      if (!pending_text.empty()) {
        XmlNode text_node;
        text_node.text = decode_entities(pending_text);
        node.children.push_back(std::move(text_node));
        pending_text.clear();
      }
    };
    for (;;) {
      if (eof()) fail("unterminated element <" + node.name + ">");
      if (starts_with("</")) {
        flush_text();
        pos_ += 2;
        std::string closing = parse_name();
        if (closing != node.name)
          fail("mismatched closing tag </" + closing + "> for <" + node.name + ">");
        skip_whitespace();
        expect(">");
        return;
      }
      if (starts_with("<!--")) {
        skip_until("-->");
        continue;
      }
      if (starts_with("<![CDATA[")) {
        pos_ += 9;
        size_t end = in_.find("]]>", pos_);
        if (end == std::string_view::npos) fail("unterminated CDATA");
        // CDATA is literal; bypass entity decoding.
        flush_text();
        XmlNode text_node;
        text_node.text = std::string(in_.substr(pos_, end - pos_));
        node.children.push_back(std::move(text_node));
        pos_ = end + 3;
        continue;
      }
      if (starts_with("<?")) {
        skip_until("?>");
        continue;
      }
      if (peek() == '<') {
        flush_text();
        node.children.push_back(parse_element());
        continue;
      }
      pending_text += peek();
      ++pos_;
    }
  }
};

}  // namespace

XmlNode parse_xml(std::string_view input) { return Parser(input).parse_document(); }

}  // namespace drylab::util
