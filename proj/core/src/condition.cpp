#include "mbrl/condition.hpp"

#include <cctype>

#include "mbrl/errors.hpp"

namespace mbrl {

struct ConditionNode {
  enum class Kind { True, False, And, Or, Not, Equal, NotEqual, In };

  Kind kind = Kind::True;
  std::vector<std::shared_ptr<const ConditionNode>> children;
  Pattern lhs;
  std::vector<Pattern> rhs;
};

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '\'' || c == '.' ||
         c == '-' || c == '+';
}

struct Token {
  enum class Kind { Ident, LParen, RParen, LBrace, RBrace, Comma, Eq, Neq, Bang, And, Or, End };
  Kind kind;
  std::string text;
  std::size_t column;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    const std::size_t col = i + 1;
    if (std::isspace(static_cast<unsigned char>(c)) != 0) {
      ++i;
      continue;
    }
    auto single = [&](Token::Kind kind) {
      tokens.push_back({kind, std::string(1, c), col});
      ++i;
    };
    switch (c) {
      case '(': single(Token::Kind::LParen); continue;
      case ')': single(Token::Kind::RParen); continue;
      case '{': single(Token::Kind::LBrace); continue;
      case '}': single(Token::Kind::RBrace); continue;
      case ',': single(Token::Kind::Comma); continue;
      case '=':
        if (i + 1 < text.size() && text[i + 1] == '=') ++i;
        single(Token::Kind::Eq);
        continue;
      case '!':
        if (i + 1 < text.size() && text[i + 1] == '=') {
          tokens.push_back({Token::Kind::Neq, "!=", col});
          i += 2;
        } else {
          single(Token::Kind::Bang);
        }
        continue;
      case '&':
        if (i + 1 < text.size() && text[i + 1] == '&') {
          tokens.push_back({Token::Kind::And, "&&", col});
          i += 2;
          continue;
        }
        throw ParseError("expected '&&'", 1, col);
      case '|':
        if (i + 1 < text.size() && text[i + 1] == '|') {
          tokens.push_back({Token::Kind::Or, "||", col});
          i += 2;
          continue;
        }
        throw ParseError("expected '||'", 1, col);
      default:
        break;
    }
    if (!is_ident_char(c)) throw ParseError(std::string("unexpected character '") + c + "'", 1, col);
    std::size_t j = i;
    while (j < text.size() && is_ident_char(text[j])) ++j;
    std::string word(text.substr(i, j - i));
    Token::Kind kind = Token::Kind::Ident;
    if (word == "and") kind = Token::Kind::And;
    if (word == "or") kind = Token::Kind::Or;
    if (word == "not") kind = Token::Kind::Bang;
    tokens.push_back({kind, std::move(word), col});
    i = j;
  }
  tokens.push_back({Token::Kind::End, "", text.size() + 1});
  return tokens;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

  Pattern pattern() {
    const Token& tok = expect(Token::Kind::Ident, "a label or variable");
    Pattern p;
    p.name = tok.text;
    if (peek().kind == Token::Kind::LParen) {
      advance();
      p.args.push_back(pattern());
      while (peek().kind == Token::Kind::Comma) {
        advance();
        p.args.push_back(pattern());
      }
      expect(Token::Kind::RParen, "')'");
    }
    if (p.args.empty()) {
      if (p.name == "_") {
        p.kind = Pattern::Kind::Wildcard;
      } else if (p.name.size() == 1 && std::isupper(static_cast<unsigned char>(p.name[0])) != 0) {
        p.kind = Pattern::Kind::TemplateVar;
      } else if (is_variable_name(p.name)) {
        p.kind = Pattern::Kind::Variable;
      }
    } else if (is_variable_name(p.name)) {
      throw ParseError("variable '" + p.name + "' cannot take arguments", 1, tok.column);
    }
    return p;
  }

  std::shared_ptr<const ConditionNode> expression() { return disjunction(); }

  void finish() {
    if (peek().kind != Token::Kind::End) {
      throw ParseError("unexpected token '" + peek().text + "'", 1, peek().column);
    }
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& advance() { return tokens_[pos_++]; }
  const Token& expect(Token::Kind kind, const char* what) {
    if (peek().kind != kind) {
      throw ParseError(std::string("expected ") + what + " but found '" + peek().text + "'", 1,
                       peek().column);
    }
    return advance();
  }

  std::shared_ptr<const ConditionNode> disjunction() {
    auto first = conjunction();
    if (peek().kind != Token::Kind::Or) return first;
    auto node = std::make_shared<ConditionNode>();
    node->kind = ConditionNode::Kind::Or;
    node->children.push_back(first);
    while (peek().kind == Token::Kind::Or) {
      advance();
      node->children.push_back(conjunction());
    }
    return node;
  }

  std::shared_ptr<const ConditionNode> conjunction() {
    auto first = unary();
    if (peek().kind != Token::Kind::And) return first;
    auto node = std::make_shared<ConditionNode>();
    node->kind = ConditionNode::Kind::And;
    node->children.push_back(first);
    while (peek().kind == Token::Kind::And) {
      advance();
      node->children.push_back(unary());
    }
    return node;
  }

  std::shared_ptr<const ConditionNode> unary() {
    if (peek().kind == Token::Kind::Bang) {
      advance();
      auto node = std::make_shared<ConditionNode>();
      node->kind = ConditionNode::Kind::Not;
      node->children.push_back(unary());
      return node;
    }
    if (peek().kind == Token::Kind::LParen) {
      advance();
      auto inner = disjunction();
      expect(Token::Kind::RParen, "')'");
      return inner;
    }
    if (peek().kind == Token::Kind::Ident && (peek().text == "true" || peek().text == "false")) {
      auto node = std::make_shared<ConditionNode>();
      node->kind = advance().text == "true" ? ConditionNode::Kind::True : ConditionNode::Kind::False;
      return node;
    }
    auto node = std::make_shared<ConditionNode>();
    node->lhs = pattern();
    const Token& op = advance();
    if (op.kind == Token::Kind::Eq) {
      node->kind = ConditionNode::Kind::Equal;
      node->rhs.push_back(pattern());
    } else if (op.kind == Token::Kind::Neq) {
      node->kind = ConditionNode::Kind::NotEqual;
      node->rhs.push_back(pattern());
    } else if (op.kind == Token::Kind::Ident && op.text == "in") {
      node->kind = ConditionNode::Kind::In;
      expect(Token::Kind::LBrace, "'{'");
      node->rhs.push_back(pattern());
      while (peek().kind == Token::Kind::Comma) {
        advance();
        node->rhs.push_back(pattern());
      }
      expect(Token::Kind::RBrace, "'}'");
    } else {
      throw ParseError("expected '=', '!=' or 'in' but found '" + op.text + "'", 1, op.column);
    }
    return node;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

const Pattern& resolve(const Pattern& p, const VariableEnv& env) {
  if (p.kind != Pattern::Kind::Variable) return p;
  const Pattern* value = env.lookup(p.name);
  if (value == nullptr) throw InstantiationError("variable '" + p.name + "' is not available here");
  return *value;
}

bool unify(const Pattern& a_in, const Pattern& b_in, const VariableEnv& env, TemplateBindings& bindings) {
  const Pattern& a = resolve(a_in, env);
  const Pattern& b = resolve(b_in, env);
  if (a.kind == Pattern::Kind::Wildcard || b.kind == Pattern::Kind::Wildcard) return true;
  if (a.kind == Pattern::Kind::TemplateVar || b.kind == Pattern::Kind::TemplateVar) {
    const Pattern& var = a.kind == Pattern::Kind::TemplateVar ? a : b;
    const Pattern& other = a.kind == Pattern::Kind::TemplateVar ? b : a;
    auto it = bindings.find(var.name);
    if (it != bindings.end()) {
      const Pattern bound = it->second;
      return unify(bound, other, env, bindings);
    }
    Pattern value = substitute(other, env, bindings);
    bindings.emplace(var.name, std::move(value));
    return true;
  }
  if (a.name != b.name || a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (!unify(a.args[i], b.args[i], env, bindings)) return false;
  }
  return true;
}

bool eval_node(const ConditionNode& node, const VariableEnv& env, TemplateBindings& bindings) {
  using Kind = ConditionNode::Kind;
  switch (node.kind) {
    case Kind::True: return true;
    case Kind::False: return false;
    case Kind::And:
      for (const auto& child : node.children) {
        if (!eval_node(*child, env, bindings)) return false;
      }
      return true;
    case Kind::Or:
      for (const auto& child : node.children) {
        TemplateBindings trial = bindings;
        if (eval_node(*child, env, trial)) {
          bindings = std::move(trial);
          return true;
        }
      }
      return false;
    case Kind::Not: {
      TemplateBindings scratch = bindings;
      return !eval_node(*node.children.front(), env, scratch);
    }
    case Kind::Equal: return unify(node.lhs, node.rhs.front(), env, bindings);
    case Kind::NotEqual: {
      TemplateBindings scratch = bindings;
      return !unify(node.lhs, node.rhs.front(), env, scratch);
    }
    case Kind::In:
      for (const auto& option : node.rhs) {
        TemplateBindings trial = bindings;
        if (unify(node.lhs, option, env, trial)) {
          bindings = std::move(trial);
          return true;
        }
      }
      return false;
  }
  return false;
}

void require_bound(const Pattern& p, const std::set<std::string>& bound, const std::string& text) {
  std::set<std::string> used;
  collect_templates(p, used);
  for (const auto& t : used) {
    if (!bound.contains(t)) {
      throw ParseError("template variable " + t + " is used before it is bound in '" + text + "'");
    }
  }
}

/// Returns the template variables bound on every satisfying path of `node`.
std::set<std::string> check_bindings(const ConditionNode& node, std::set<std::string> bound,
                                     const std::string& text) {
  using Kind = ConditionNode::Kind;
  switch (node.kind) {
    case Kind::True:
    case Kind::False: return bound;
    case Kind::And:
      for (const auto& child : node.children) bound = check_bindings(*child, bound, text);
      return bound;
    case Kind::Or: {
      std::set<std::string> common;
      bool first = true;
      for (const auto& child : node.children) {
        auto branch = check_bindings(*child, bound, text);
        if (first) {
          common = branch;
          first = false;
        } else {
          std::set<std::string> both;
          for (const auto& t : branch) {
            if (common.contains(t)) both.insert(t);
          }
          common = std::move(both);
        }
      }
      return common;
    }
    case Kind::Not:
      // Bindings made under a negation never escape it.
      check_bindings(*node.children.front(), bound, text);
      return bound;
    case Kind::NotEqual:
      require_bound(node.lhs, bound, text);
      require_bound(node.rhs.front(), bound, text);
      return bound;
    case Kind::Equal: {
      std::set<std::string> lhs_t;
      std::set<std::string> rhs_t;
      collect_templates(node.lhs, lhs_t);
      collect_templates(node.rhs.front(), rhs_t);
      std::set<std::string> out = bound;
      out.insert(lhs_t.begin(), lhs_t.end());
      out.insert(rhs_t.begin(), rhs_t.end());
      return out;
    }
    case Kind::In: {
      std::set<std::string> lhs_t;
      collect_templates(node.lhs, lhs_t);
      std::set<std::string> common;
      bool first = true;
      for (const auto& option : node.rhs) {
        std::set<std::string> opt = lhs_t;
        collect_templates(option, opt);
        if (first) {
          common = opt;
          first = false;
        } else {
          std::set<std::string> both;
          for (const auto& t : opt) {
            if (common.contains(t)) both.insert(t);
          }
          common = std::move(both);
        }
      }
      common.insert(bound.begin(), bound.end());
      return common;
    }
  }
  return bound;
}

void collect_node_variables(const ConditionNode& node, std::set<std::string>& out) {
  for (const auto& child : node.children) collect_node_variables(*child, out);
  if (node.kind == ConditionNode::Kind::Equal || node.kind == ConditionNode::Kind::NotEqual ||
      node.kind == ConditionNode::Kind::In) {
    collect_variables(node.lhs, out);
    for (const auto& p : node.rhs) collect_variables(p, out);
  }
}

}  // namespace

Pattern Pattern::label(std::string head, std::vector<Pattern> args) {
  Pattern p;
  p.kind = Kind::Label;
  p.name = std::move(head);
  p.args = std::move(args);
  return p;
}

bool Pattern::is_concrete() const {
  if (kind != Kind::Label) return false;
  for (const auto& a : args) {
    if (!a.is_concrete()) return false;
  }
  return true;
}

std::string Pattern::str() const {
  std::string out = name;
  if (!args.empty()) {
    out += '(';
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i > 0) out += ',';
      out += args[i].str();
    }
    out += ')';
  }
  return out;
}

Pattern parse_pattern(std::string_view text) {
  Parser parser(text);
  Pattern p = parser.pattern();
  parser.finish();
  return p;
}

std::string canonical_label(std::string_view text) {
  Pattern p = parse_pattern(text);
  if (!p.is_concrete()) {
    throw ParseError("label '" + std::string(text) + "' must not contain variables or wildcards");
  }
  return p.str();
}

std::string label_head(std::string_view text) { return parse_pattern(text).name; }

bool is_variable_name(std::string_view name) {
  return name == "a_m" || name == "i_u" || name == "i_u'" || name == "a_u" || name == "a_u'" ||
         (name.size() > 2 && name.substr(0, 2) == "c.");
}

const Pattern* VariableEnv::lookup(const std::string& variable) const {
  if (variable == "a_m") return machine_action;
  if (variable == "i_u") return intention;
  if (variable == "i_u'") return next_intention;
  if (variable == "a_u") return user_act;
  if (variable == "a_u'") return next_user_act;
  if (variable.size() > 2 && variable.compare(0, 2, "c.") == 0) {
    const std::string name = variable.substr(2);
    for (const auto& [var, value] : context) {
      if (var == name) return value;
    }
  }
  return nullptr;
}

Pattern substitute(const Pattern& pattern, const VariableEnv& env, const TemplateBindings& bindings) {
  switch (pattern.kind) {
    case Pattern::Kind::Variable: return resolve(pattern, env);
    case Pattern::Kind::TemplateVar: {
      auto it = bindings.find(pattern.name);
      if (it == bindings.end()) {
        throw InstantiationError("template variable " + pattern.name + " is unbound");
      }
      return it->second;
    }
    case Pattern::Kind::Wildcard: throw InstantiationError("wildcard cannot be instantiated");
    case Pattern::Kind::Label: break;
  }
  Pattern out = Pattern::label(pattern.name);
  out.args.reserve(pattern.args.size());
  for (const auto& a : pattern.args) out.args.push_back(substitute(a, env, bindings));
  return out;
}

Condition::Condition() : Condition("true") {}

Condition::Condition(std::string_view text) : text_(text) {
  Parser parser(text);
  root_ = parser.expression();
  parser.finish();
  bound_ = check_bindings(*root_, {}, text_);
  collect_node_variables(*root_, variables_);
}

bool Condition::evaluate(const VariableEnv& env, TemplateBindings& bindings) const {
  return eval_node(*root_, env, bindings);
}

bool Condition::evaluate(const VariableEnv& env) const {
  TemplateBindings bindings;
  return evaluate(env, bindings);
}

namespace {

void collect_comparisons(const ConditionNode& node, std::vector<std::pair<Pattern, Pattern>>& out) {
  for (const auto& child : node.children) collect_comparisons(*child, out);
  for (const auto& p : node.rhs) out.emplace_back(node.lhs, p);
}

}  // namespace

std::vector<std::pair<Pattern, Pattern>> Condition::comparisons() const {
  std::vector<std::pair<Pattern, Pattern>> out;
  collect_comparisons(*root_, out);
  return out;
}

void collect_variables(const Pattern& pattern, std::set<std::string>& out) {
  if (pattern.kind == Pattern::Kind::Variable) out.insert(pattern.name);
  for (const auto& a : pattern.args) collect_variables(a, out);
}

void collect_templates(const Pattern& pattern, std::set<std::string>& out) {
  if (pattern.kind == Pattern::Kind::TemplateVar) out.insert(pattern.name);
  for (const auto& a : pattern.args) collect_templates(a, out);
}

}  // namespace mbrl
