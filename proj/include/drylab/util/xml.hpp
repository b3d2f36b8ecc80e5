#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace drylab::util {

/// Small DOM for the XML subset served by NCBI endpoints (JATS full text,
/// PubmedArticleSet). Elements hold attributes and an ordered child list;
/// text runs appear as children with an empty element name.
struct XmlNode {
  std::string name;  // empty for text nodes
  std::string text;  // text-node payload
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<XmlNode> children;

  bool is_text() const { return name.empty(); }

  std::string attribute(std::string_view key) const;

  /// First direct child element with this name, or nullptr.
  const XmlNode* child(std::string_view name) const;

  /// All direct child elements with this name.
  std::vector<const XmlNode*> children_named(std::string_view name) const;

  /// Depth-first search for the first element with this name.
  const XmlNode* find(std::string_view name) const;

  /// Depth-first collection of every element with this name.
  std::vector<const XmlNode*> find_all(std::string_view name) const;

  /// Concatenated text content of the whole subtree.
  std::string inner_text() const;
};

/// Parse a document and return its root element.
/// Throws drylab::DocumentError on malformed input.
XmlNode parse_xml(std::string_view input);

}  // namespace drylab::util
