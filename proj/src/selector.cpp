#include "compdoc/selector.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "compdoc/error.hpp"

namespace compdoc {

NamespaceMap default_namespaces() {
  return {{"cml", std::string(xml::kCMLNamespace)},
          {"m", std::string(xml::kMathMLNamespace)},
          {"sem", std::string(xml::kDeXMLNamespace)}};
}

namespace {

bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

class Parser {
 public:
  Parser(std::string_view text, const NamespaceMap& ns) : text_(text), ns_(ns) {}

  [[noreturn]] void error(std::size_t at, const std::string& what) const {
    fail(Errc::selector_syntax,
         "selector '" + std::string(text_) + "': " + what + " at offset " + std::to_string(at));
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek(std::size_t ahead = 0) const { return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0'; }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  [[noreturn]] void unexpected(const std::string& expected) const {
    if (at_end() && !open_.empty()) error(open_.back(), "unterminated predicate");
    if (at_end()) error(pos_, "expected " + expected + " but the path ends");
    error(pos_, "expected " + expected + ", found '" + std::string(1, peek()) + "'");
  }

  Selector::NameTest name_test() {
    Selector::NameTest t;
    if (peek() == '*') {
      ++pos_;
      t.any = true;
      return t;
    }
    if (!name_start(peek())) unexpected("a name");
    const std::size_t start = pos_;
    while (!at_end() && name_char(peek())) ++pos_;
    std::string first(text_.substr(start, pos_ - start));
    if (peek() == ':' && name_start(peek(1))) {
      ++pos_;
      const std::size_t s2 = pos_;
      while (!at_end() && name_char(peek())) ++pos_;
      const auto it = ns_.find(first);
      if (it == ns_.end()) {
        fail(Errc::unbound_prefix, "selector '" + std::string(text_) + "': namespace prefix '" + first +
                                       "' is not bound (offset " + std::to_string(start) + ")");
      }
      t.qualified = true;
      t.ns_uri = it->second;
      t.local = std::string(text_.substr(s2, pos_ - s2));
    } else {
      t.local = std::move(first);
    }
    return t;
  }

  std::string literal() {
    const char quote = peek();
    if (quote != '\'' && quote != '"') unexpected("a quoted literal");
    const std::size_t start = ++pos_;
    while (!at_end() && peek() != quote) ++pos_;
    if (at_end()) error(start - 1, "unterminated literal");
    std::string value(text_.substr(start, pos_ - start));
    ++pos_;
    return value;
  }

  bool keyword_and() {
    skip_ws();
    if (text_.substr(pos_, 3) == "and" && !name_char(peek(3))) {
      pos_ += 3;
      return true;
    }
    return false;
  }

  Selector::Term term() {
    skip_ws();
    if (peek() == '@') {
      ++pos_;
      Selector::AttributeTest a;
      a.name = name_test();
      skip_ws();
      if (peek() == '=') {
        ++pos_;
        skip_ws();
        a.value = literal();
      }
      return a;
    }
    Selector::PathTest p;
    p.steps.push_back(step(Selector::Axis::child));
    while (peek() == '/') {
      ++pos_;
      if (peek() == '/') error(pos_, "'//' is not allowed inside a predicate");
      p.steps.push_back(step(Selector::Axis::child));
    }
    return p;
  }

  std::vector<Selector::Term> predicate() {
    open_.push_back(pos_);
    ++pos_;  // '['
    std::vector<Selector::Term> terms;
    terms.push_back(term());
    while (keyword_and()) terms.push_back(term());
    skip_ws();
    if (peek() != ']') unexpected("']' or 'and'");
    ++pos_;
    open_.pop_back();
    return terms;
  }

  Selector::Step step(Selector::Axis axis) {
    Selector::Step s;
    s.axis = axis;
    if (peek() == '.' && peek(1) != '.') {
      ++pos_;
      s.axis = Selector::Axis::self;
      s.name.any = true;
    } else {
      s.name = name_test();
    }
    while (peek() == '[') s.predicates.push_back(predicate());
    return s;
  }

  void run() {
    Selector::Axis next = Selector::Axis::child;
    if (text_.empty()) error(0, "empty path");
    bool need_step = true;
    if (text_.substr(0, 2) == "//") {
      absolute_ = true;
      next = Selector::Axis::descendant;
      pos_ = 2;
    } else if (peek() == '/') {
      absolute_ = true;
      pos_ = 1;
    } else if (peek() == '.' && peek(1) != '.') {
      steps_.push_back(step(Selector::Axis::self));
      need_step = false;
    }
    while (true) {
      if (need_step) {
        if (peek() == '@') {
          ++pos_;
          attribute_ = name_test();
          if (!at_end()) error(pos_, "attribute step must be last");
          break;
        }
        steps_.push_back(step(next));
      }
      need_step = true;
      if (at_end()) break;
      if (text_.substr(pos_, 2) == "//") {
        pos_ += 2;
        next = Selector::Axis::descendant;
      } else if (peek() == '/') {
        ++pos_;
        next = Selector::Axis::child;
      } else {
        unexpected("'/'");
      }
      if (at_end()) error(pos_, "path ends after a separator");
    }
  }

  std::string_view text_;
  const NamespaceMap& ns_;
  std::size_t pos_ = 0;
  std::vector<std::size_t> open_;
  bool absolute_ = false;
  std::vector<Selector::Step> steps_;
  std::optional<Selector::NameTest> attribute_;
};

bool name_matches(const Selector::NameTest& t, const xml::Element& e) {
  if (t.any) return true;
  if (e.local_name() != t.local) return false;
  return e.namespace_uri() == (t.qualified ? t.ns_uri : std::string{});
}

const std::string* attribute_matching(const Selector::NameTest& t, const xml::Element& e) {
  if (t.any) return e.attributes().empty() ? nullptr : &e.attributes().front().value;
  if (t.qualified) return e.attribute_ns(t.ns_uri, t.local);
  return e.attribute(t.local);
}

void collect_descendants(const xml::Element& e, std::vector<const xml::Element*>& out) {
  for (const auto* c : e.child_elements()) {
    out.push_back(c);
    collect_descendants(*c, out);
  }
}

bool step_accepts(const Selector::Step& s, const xml::Element& e);

std::vector<const xml::Element*> apply_step(const Selector::Step& s, const std::vector<const xml::Element*>& ctx) {
  std::vector<const xml::Element*> out;
  for (const auto* node : ctx) {
    std::vector<const xml::Element*> candidates;
    if (s.axis == Selector::Axis::self) {
      candidates.push_back(node);
    } else if (s.axis == Selector::Axis::child) {
      candidates = node->child_elements();
    } else {
      collect_descendants(*node, candidates);
    }
    for (const auto* c : candidates) {
      if (step_accepts(s, *c)) out.push_back(c);
    }
  }
  return out;
}

bool term_holds(const Selector::Term& t, const xml::Element& e) {
  if (const auto* a = std::get_if<Selector::AttributeTest>(&t)) {
    const std::string* v = attribute_matching(a->name, e);
    return v != nullptr && (!a->value || *v == *a->value);
  }
  const auto& p = std::get<Selector::PathTest>(t);
  std::vector<const xml::Element*> ctx{&e};
  for (const auto& s : p.steps) {
    ctx = apply_step(s, ctx);
    if (ctx.empty()) return false;
  }
  return true;
}

bool step_accepts(const Selector::Step& s, const xml::Element& e) {
  if (!name_matches(s.name, e)) return false;
  for (const auto& conj : s.predicates) {
    for (const auto& t : conj) {
      if (!term_holds(t, e)) return false;
    }
  }
  return true;
}

}  // namespace

Selector Selector::compile(std::string_view path, const NamespaceMap& namespaces) {
  Parser p(path, namespaces);
  p.run();
  Selector s;
  s.text_ = std::string(path);
  s.absolute_ = p.absolute_;
  s.steps_ = std::move(p.steps_);
  s.attribute_ = std::move(p.attribute_);
  return s;
}

std::vector<const xml::Element*> Selector::select(const xml::Element& context) const {
  std::vector<const xml::Element*> ctx;
  std::size_t first = 0;
  if (absolute_) {
    // The document node's only child is the root element.
    const xml::Element& root = context.root();
    if (steps_.empty()) return {};
    const Step& s0 = steps_.front();
    std::vector<const xml::Element*> candidates{&root};
    if (s0.axis == Axis::descendant) collect_descendants(root, candidates);
    for (const auto* c : candidates) {
      if (step_accepts(s0, *c)) ctx.push_back(c);
    }
    first = 1;
  } else {
    ctx.push_back(&context);
  }
  for (std::size_t i = first; i < steps_.size() && !ctx.empty(); ++i) {
    ctx = apply_step(steps_[i], ctx);
    if (ctx.size() > 1) {
      // Restore document order and drop duplicates from overlapping descendant scans.
      std::unordered_map<const xml::Element*, std::size_t> order;
      std::vector<const xml::Element*> all{&context.root()};
      collect_descendants(context.root(), all);
      for (std::size_t k = 0; k < all.size(); ++k) order.emplace(all[k], k);
      std::sort(ctx.begin(), ctx.end(), [&](auto* a, auto* b) { return order.at(a) < order.at(b); });
      ctx.erase(std::unique(ctx.begin(), ctx.end()), ctx.end());
    }
  }
  if (attribute_) {
    std::erase_if(ctx, [&](const xml::Element* e) { return attribute_matching(*attribute_, *e) == nullptr; });
  }
  return ctx;
}

std::vector<xml::Element*> Selector::select(xml::Element& context) const {
  const auto found = select(static_cast<const xml::Element&>(context));
  std::vector<xml::Element*> out;
  out.reserve(found.size());
  for (const auto* e : found) out.push_back(const_cast<xml::Element*>(e));
  return out;
}

std::vector<std::string> Selector::select_strings(const xml::Element& context) const {
  std::vector<std::string> out;
  for (const auto* e : select(context)) {
    if (attribute_) {
      out.push_back(*attribute_matching(*attribute_, *e));
    } else {
      std::string t = e->text();
      const auto a = t.find_first_not_of(" \t\r\n");
      const auto b = t.find_last_not_of(" \t\r\n");
      out.push_back(a == std::string::npos ? std::string{} : t.substr(a, b - a + 1));
    }
  }
  return out;
}

}  // namespace compdoc
