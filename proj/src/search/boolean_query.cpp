#include "drylab/search/boolean_query.hpp"

#include <cctype>

#include "drylab/errors.hpp"
#include "drylab/util/strings.hpp"

namespace drylab::search {

bool QueryNode::operator==(const QueryNode& other) const {
  return kind == other.kind && term == other.term && field == other.field &&
         phrase == other.phrase && children == other.children;
}

QueryNode QueryNode::make_term(std::string term, std::string field, bool phrase) {
  QueryNode n;
  n.kind = Kind::Term;
  n.term = std::move(term);
  n.field = std::move(field);
  n.phrase = phrase;
  return n;
}

QueryNode QueryNode::make_and(std::vector<QueryNode> children) {
  QueryNode n;
  n.kind = Kind::And;
  n.children = std::move(children);
  return n;
}

QueryNode QueryNode::make_or(std::vector<QueryNode> children) {
  QueryNode n;
  n.kind = Kind::Or;
  n.children = std::move(children);
  return n;
}

namespace {

void serialize_node(const QueryNode& node, std::string& out, bool parenthesize) {
  if (node.kind == QueryNode::Kind::Term) {
    if (node.phrase || node.term.find(' ') != std::string::npos)
      out += "\"" + node.term + "\"";
    else
      out += node.term;
    if (!node.field.empty()) out += "[" + node.field + "]";
    return;
  }
  const char* op = node.kind == QueryNode::Kind::And ? " AND " : " OR ";
  if (parenthesize) out += "(";
  bool first = true;
  for (const auto& child : node.children) {
    if (!first) out += op;
    first = false;
    serialize_node(child, out, /*parenthesize=*/child.kind != QueryNode::Kind::Term);
  }
  if (parenthesize) out += ")";
}

struct Token {
  enum class Kind { Term, And, Or, LParen, RParen, End } kind;
  std::string term;
  std::string field;
  bool phrase = false;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    skip_ws();
    if (pos_ >= text_.size()) return {Token::Kind::End, "", "", false};
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      return {Token::Kind::LParen, "", "", false};
    }
    if (c == ')') {
      ++pos_;
      return {Token::Kind::RParen, "", "", false};
    }
    if (c == '"') return quoted_term();
    return bare_word();
  }

 private:
  const std::string& text_;
  size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& why) {
    throw QueryGenerationError("query syntax error at offset " + std::to_string(pos_) +
                               ": " + why);
  }

  std::string maybe_field_tag() {
    if (pos_ >= text_.size() || text_[pos_] != '[') return "";
    size_t close = text_.find(']', pos_);
    if (close == std::string::npos) fail("unterminated field tag");
    std::string field = text_.substr(pos_ + 1, close - pos_ - 1);
    if (field.empty()) fail("empty field tag");
    pos_ = close + 1;
    return field;
  }

  Token quoted_term() {
    size_t close = text_.find('"', pos_ + 1);
    if (close == std::string::npos) fail("unterminated quoted phrase");
    std::string term = text_.substr(pos_ + 1, close - pos_ - 1);
    if (drylab::util::trim(term).empty()) fail("empty quoted phrase");
    pos_ = close + 1;
    return {Token::Kind::Term, term, maybe_field_tag(), true};
  }

  Token bare_word() {
    size_t start = pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '"' ||
          c == '[')
        break;
      ++pos_;
    }
    std::string word = text_.substr(start, pos_ - start);
    if (word.empty()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    if (word == "AND") return {Token::Kind::And, "", "", false};
    if (word == "OR") return {Token::Kind::Or, "", "", false};
    if (word == "NOT") fail("operator NOT is not supported; use AND/OR");
    return {Token::Kind::Term, word, maybe_field_tag(), false};
  }
};

// Grammar (AND binds tighter than OR):
//   or_expr  := and_expr (OR and_expr)*
//   and_expr := unit (AND unit)*
//   unit     := '(' or_expr ')' | term
class QueryParser {
 public:
  explicit QueryParser(const std::string& text) : lexer_(text) { advance(); }

  QueryNode parse() {
    QueryNode node = or_expr();
    if (current_.kind != Token::Kind::End)
      fail(current_.kind == Token::Kind::RParen ? "unbalanced ')'"
                                                : "expected AND/OR between terms");
    return node;
  }

 private:
  Lexer lexer_;
  Token current_{Token::Kind::End, "", "", false};

  void advance() { current_ = lexer_.next(); }

  [[noreturn]] void fail(const std::string& why) {
    throw QueryGenerationError("query syntax error: " + why);
  }

  QueryNode or_expr() {
    std::vector<QueryNode> parts;
    parts.push_back(and_expr());
    while (current_.kind == Token::Kind::Or) {
      advance();
      parts.push_back(and_expr());
    }
    if (parts.size() == 1) return std::move(parts.front());
    return QueryNode::make_or(std::move(parts));
  }

  QueryNode and_expr() {
    std::vector<QueryNode> parts;
    parts.push_back(unit());
    while (current_.kind == Token::Kind::And) {
      advance();
      parts.push_back(unit());
    }
    if (parts.size() == 1) return std::move(parts.front());
    return QueryNode::make_and(std::move(parts));
  }

  QueryNode unit() {
    switch (current_.kind) {
      case Token::Kind::LParen: {
        advance();
        QueryNode inner = or_expr();
        if (current_.kind != Token::Kind::RParen) fail("unbalanced '('");
        advance();
        return inner;
      }
      case Token::Kind::Term: {
        QueryNode term = QueryNode::make_term(current_.term, current_.field, current_.phrase);
        advance();
        if (current_.kind == Token::Kind::Term)
          fail("terms must be joined with AND/OR (quote multi-word phrases)");
        return term;
      }
      case Token::Kind::And:
      case Token::Kind::Or:
        fail("operator without a left-hand term");
      case Token::Kind::RParen:
        fail("unbalanced ')'");
      case Token::Kind::End:
        fail("query is empty or ends with an operator");
    }
    fail("unreachable");
  }
};

}  // namespace

std::string BooleanQuery::serialize() const {
  std::string out;
  serialize_node(root, out, /*parenthesize=*/false);
  return out;
}

BooleanQuery BooleanQuery::parse(const std::string& text, std::string database) {
  if (util::trim(text).empty()) throw QueryGenerationError("query text is empty");
  BooleanQuery q;
  q.root = QueryParser(text).parse();
  q.database = std::move(database);
  return q;
}

}  // namespace drylab::search
