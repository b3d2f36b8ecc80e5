#pragma once

#include <string>
#include <vector>

namespace drylab::search {

/// Expression tree for a Boolean database query. Leaves are terms
/// (optionally quoted phrases, optionally field-tagged); interior nodes are
/// n-ary AND/OR with at least two children. Serializes to E-utilities query
/// syntax and parses back to an equal tree.
struct QueryNode {
  enum class Kind { Term, And, Or };

  Kind kind = Kind::Term;
  std::string term;    // leaf payload
  std::string field;   // optional field tag, e.g. "Title/Abstract"
  bool phrase = false; // leaf was quoted
  std::vector<QueryNode> children;

  bool operator==(const QueryNode& other) const;

  static QueryNode make_term(std::string term, std::string field = "", bool phrase = false);
  static QueryNode make_and(std::vector<QueryNode> children);
  static QueryNode make_or(std::vector<QueryNode> children);
};

struct BooleanQuery {
  QueryNode root;
  std::string database;  // bound when the query is used against a database

  /// Render in E-utilities syntax: quoted phrases, [field] tags,
  /// parenthesized sub-expressions.
  std::string serialize() const;

  /// Parse query text. Throws QueryGenerationError on syntax errors
  /// (unbalanced parentheses, dangling operators, empty terms).
  static BooleanQuery parse(const std::string& text, std::string database = "");

  bool operator==(const BooleanQuery& other) const { return root == other.root; }
};

}  // namespace drylab::search
