#include "compdoc/xml.hpp"

#include <expat.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <set>

#include "compdoc/error.hpp"

namespace compdoc::xml {

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
  });
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

Element::Element(std::string name) : name_(std::move(name)) {}
Element::~Element() = default;

std::string_view Element::prefix() const {
  const auto colon = name_.find(':');
  return colon == std::string::npos ? std::string_view{} : std::string_view(name_).substr(0, colon);
}

std::string_view Element::local_name() const {
  const auto colon = name_.find(':');
  return colon == std::string::npos ? std::string_view(name_) : std::string_view(name_).substr(colon + 1);
}

std::optional<std::string> Element::lookup_namespace(std::string_view prefix) const {
  if (prefix == "xml") return std::string("http://www.w3.org/XML/1998/namespace");
  const std::string key = prefix.empty() ? std::string("xmlns") : "xmlns:" + std::string(prefix);
  for (const Element* e = this; e != nullptr; e = e->parent_) {
    if (const auto* v = e->attribute(key)) return *v;
  }
  return std::nullopt;
}

std::optional<std::string> Element::prefix_for(std::string_view uri) const {
  std::set<std::string> shadowed;
  for (const Element* e = this; e != nullptr; e = e->parent_) {
    for (const auto& a : e->attributes_) {
      std::string p;
      if (a.name == "xmlns") {
        p = "";
      } else if (a.name.rfind("xmlns:", 0) == 0) {
        p = a.name.substr(6);
      } else {
        continue;
      }
      if (shadowed.count(p)) continue;
      shadowed.insert(p);
      if (a.value == uri) return p;
    }
  }
  return std::nullopt;
}

std::string Element::namespace_uri() const {
  return lookup_namespace(prefix()).value_or(std::string{});
}

bool Element::is(std::string_view ns_uri, std::string_view local) const {
  return local_name() == local && namespace_uri() == ns_uri;
}

const std::string* Element::attribute(std::string_view name) const {
  for (const auto& a : attributes_) {
    if (a.name == name) return &a.value;
  }
  return nullptr;
}

const std::string* Element::attribute_ns(std::string_view ns_uri, std::string_view local) const {
  for (const auto& a : attributes_) {
    const auto colon = a.name.find(':');
    if (colon == std::string::npos) continue;
    const std::string_view p = std::string_view(a.name).substr(0, colon);
    if (p == "xmlns") continue;
    if (std::string_view(a.name).substr(colon + 1) != local) continue;
    if (lookup_namespace(p) == std::optional<std::string>(std::string(ns_uri))) return &a.value;
  }
  return nullptr;
}

void Element::set_attribute(std::string_view name, std::string value) {
  for (auto& a : attributes_) {
    if (a.name == name) {
      a.value = std::move(value);
      return;
    }
  }
  attributes_.push_back({std::string(name), std::move(value)});
}

bool Element::remove_attribute(std::string_view name) {
  const auto it = std::find_if(attributes_.begin(), attributes_.end(),
                               [&](const Attribute& a) { return a.name == name; });
  if (it == attributes_.end()) return false;
  attributes_.erase(it);
  return true;
}

const Element& Element::root() const {
  const Element* e = this;
  while (e->parent_ != nullptr) e = e->parent_;
  return *e;
}

Element& Element::root() {
  Element* e = this;
  while (e->parent_ != nullptr) e = e->parent_;
  return *e;
}

std::vector<Element*> Element::child_elements() {
  std::vector<Element*> out;
  for (auto& c : children_) {
    if (c.element) out.push_back(c.element.get());
  }
  return out;
}

std::vector<const Element*> Element::child_elements() const {
  std::vector<const Element*> out;
  for (const auto& c : children_) {
    if (c.element) out.push_back(c.element.get());
  }
  return out;
}

const Element* Element::first_child(std::string_view ns_uri, std::string_view local) const {
  for (const auto& c : children_) {
    if (c.element && c.element->is(ns_uri, local)) return c.element.get();
  }
  return nullptr;
}

Element& Element::append(std::unique_ptr<Element> child) {
  child->parent_ = this;
  children_.push_back({std::move(child), {}});
  return *children_.back().element;
}

Element& Element::insert(std::size_t index, std::unique_ptr<Element> child) {
  child->parent_ = this;
  index = std::min(index, children_.size());
  auto it = children_.insert(children_.begin() + static_cast<std::ptrdiff_t>(index),
                             Child{std::move(child), {}});
  return *it->element;
}

void Element::append_text(std::string text) {
  if (!children_.empty() && !children_.back().is_element()) {
    children_.back().text += text;
  } else {
    children_.push_back({nullptr, std::move(text)});
  }
}

void Element::clear_children() { children_.clear(); }

void Element::rewrite_text(const std::function<std::string(const std::string&)>& f) {
  for (auto& c : children_) {
    if (!c.is_element()) c.text = f(c.text);
  }
}

std::size_t Element::index_in_parent() const {
  if (parent_ == nullptr) return 0;
  for (std::size_t i = 0; i < parent_->children_.size(); ++i) {
    if (parent_->children_[i].element.get() == this) return i;
  }
  return 0;
}

std::unique_ptr<Element> Element::detach() {
  if (parent_ == nullptr) return nullptr;
  auto& siblings = parent_->children_;
  const std::size_t i = index_in_parent();
  std::unique_ptr<Element> self = std::move(siblings[i].element);
  siblings.erase(siblings.begin() + static_cast<std::ptrdiff_t>(i));
  self->parent_ = nullptr;
  return self;
}

std::unique_ptr<Element> Element::replace_with(std::unique_ptr<Element> replacement) {
  Element* p = parent_;
  const std::size_t i = index_in_parent();
  std::unique_ptr<Element> self = std::move(p->children_[i].element);
  self->parent_ = nullptr;
  replacement->parent_ = p;
  p->children_[i].element = std::move(replacement);
  return self;
}

std::string Element::text() const {
  std::string out;
  for (const auto& c : children_) {
    if (!c.is_element()) out += c.text;
  }
  return out;
}

void Element::set_text(std::string text) {
  children_.clear();
  children_.push_back({nullptr, std::move(text)});
}

std::unique_ptr<Element> Element::clone() const {
  auto copy = std::make_unique<Element>(name_);
  copy->attributes_ = attributes_;
  copy->line_ = line_;
  for (const auto& c : children_) {
    if (c.element) {
      copy->append(c.element->clone());
    } else {
      copy->children_.push_back({nullptr, c.text});
    }
  }
  return copy;
}

void Element::materialize_namespaces() {
  std::map<std::string, std::string> in_scope;
  for (const Element* e = parent_; e != nullptr; e = e->parent_) {
    for (const auto& a : e->attributes_) {
      if (a.name == "xmlns" || a.name.rfind("xmlns:", 0) == 0) in_scope.emplace(a.name, a.value);
    }
  }
  for (auto& [name, value] : in_scope) {
    if (!has_attribute(name)) attributes_.push_back({name, value});
  }
}

std::unique_ptr<Element> standalone_copy(const Element& element) {
  auto copy = element.clone();
  for (const Element* e = &element; e != nullptr; e = e->parent()) {
    for (const auto& a : e->attributes()) {
      if ((a.name == "xmlns" || a.name.rfind("xmlns:", 0) == 0) && !copy->has_attribute(a.name)) {
        copy->set_attribute(a.name, a.value);
      }
    }
  }
  return copy;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct ParseState {
  std::unique_ptr<Element> root;
  Element* current = nullptr;
  std::string pending_text;
  XML_Parser parser = nullptr;

  void flush_text() {
    if (current != nullptr && !pending_text.empty() && !is_blank(pending_text)) {
      current->append_text(pending_text);
    }
    pending_text.clear();
  }
};

void XMLCALL on_start(void* data, const XML_Char* name, const XML_Char** atts) {
  auto* st = static_cast<ParseState*>(data);
  st->flush_text();
  auto e = std::make_unique<Element>(name);
  e->set_line(static_cast<int>(XML_GetCurrentLineNumber(st->parser)));
  for (int i = 0; atts[i] != nullptr; i += 2) e->set_attribute(atts[i], atts[i + 1]);
  if (st->current == nullptr) {
    st->root = std::move(e);
    st->current = st->root.get();
  } else {
    st->current = &st->current->append(std::move(e));
  }
}

void XMLCALL on_end(void* data, const XML_Char*) {
  auto* st = static_cast<ParseState*>(data);
  st->flush_text();
  st->current = st->current->parent();
}

void XMLCALL on_text(void* data, const XML_Char* s, int len) {
  auto* st = static_cast<ParseState*>(data);
  if (st->current != nullptr) st->pending_text.append(s, static_cast<std::size_t>(len));
}

}  // namespace

std::unique_ptr<Element> parse(std::string_view text, std::string_view source_name) {
  ParseState st;
  std::unique_ptr<XML_ParserStruct, decltype(&XML_ParserFree)> parser(XML_ParserCreate("UTF-8"),
                                                                      &XML_ParserFree);
  st.parser = parser.get();
  XML_SetUserData(parser.get(), &st);
  XML_SetElementHandler(parser.get(), on_start, on_end);
  XML_SetCharacterDataHandler(parser.get(), on_text);
  if (XML_Parse(parser.get(), text.data(), static_cast<int>(text.size()), XML_TRUE) == XML_STATUS_ERROR) {
    fail(Errc::xml_parse, std::string(source_name) + ":" +
                              std::to_string(XML_GetCurrentLineNumber(parser.get())) + ":" +
                              std::to_string(XML_GetCurrentColumnNumber(parser.get()) + 1) + ": " +
                              XML_ErrorString(XML_GetErrorCode(parser.get())));
  }
  if (!st.root) fail(Errc::xml_parse, std::string(source_name) + ": no root element");
  return std::move(st.root);
}

// ---------------------------------------------------------------------------
// Serialization

std::string escape_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '\r': out += "&#13;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string escape_attribute(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\n': out += "&#10;"; break;
      case '\r': out += "&#13;"; break;
      case '\t': out += "&#9;"; break;
      default: out += c;
    }
  }
  return out;
}

namespace {

void write_open_tag(const Element& e, std::string& out) {
  out += '<';
  out += e.name();
  std::vector<const Attribute*> attrs;
  for (const auto& a : e.attributes()) attrs.push_back(&a);
  std::sort(attrs.begin(), attrs.end(),
            [](const Attribute* a, const Attribute* b) { return a->name < b->name; });
  for (const auto* a : attrs) {
    out += ' ';
    out += a->name;
    out += "=\"";
    out += escape_attribute(a->value);
    out += '"';
  }
}

void write_inline(const Element& e, std::string& out) {
  write_open_tag(e, out);
  if (e.children().empty()) {
    out += "/>";
    return;
  }
  out += '>';
  for (const auto& c : e.children()) {
    if (c.element) {
      write_inline(*c.element, out);
    } else {
      out += escape_text(c.text);
    }
  }
  out += "</" + e.name() + ">";
}

void write_indented(const Element& e, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  const bool all_elements = std::all_of(e.children().begin(), e.children().end(),
                                        [](const Child& c) { return c.is_element(); });
  out += pad;
  if (e.children().empty() || !all_elements) {
    write_inline(e, out);
    out += '\n';
    return;
  }
  write_open_tag(e, out);
  out += ">\n";
  for (const auto& c : e.children()) write_indented(*c.element, out, depth + 1);
  out += pad + "</" + e.name() + ">\n";
}

}  // namespace

std::string serialize(const Element& element, SerializeOptions options) {
  std::string out;
  if (options.declaration) out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (options.indent) {
    write_indented(element, out, 0);
  } else {
    write_inline(element, out);
  }
  return out;
}

bool structurally_equal(const Element& a, const Element& b) {
  if (a.name() != b.name()) return false;
  if (a.attributes().size() != b.attributes().size()) return false;
  for (const auto& attr : a.attributes()) {
    const auto* other = b.attribute(attr.name);
    if (other == nullptr || *other != attr.value) return false;
  }
  std::vector<const Child*> ca, cb;
  for (const auto& c : a.children()) {
    if (c.element || !trim(c.text).empty()) ca.push_back(&c);
  }
  for (const auto& c : b.children()) {
    if (c.element || !trim(c.text).empty()) cb.push_back(&c);
  }
  if (ca.size() != cb.size()) return false;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (ca[i]->is_element() != cb[i]->is_element()) return false;
    if (ca[i]->is_element()) {
      if (!structurally_equal(*ca[i]->element, *cb[i]->element)) return false;
    } else if (trim(ca[i]->text) != trim(cb[i]->text)) {
      return false;
    }
  }
  return true;
}

std::string path_of(const Element& element) {
  std::vector<std::string> parts;
  for (const Element* e = &element; e != nullptr; e = e->parent()) {
    std::string part = e->name();
    if (const Element* p = e->parent()) {
      int index = 0, count = 0;
      for (const Element* sib : p->child_elements()) {
        if (sib->name() == e->name()) {
          ++count;
          if (sib == e) index = count;
        }
      }
      if (count > 1) part += "[" + std::to_string(index) + "]";
    }
    parts.push_back(std::move(part));
  }
  std::string out;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) out += "/" + *it;
  return out;
}

}  // namespace compdoc::xml
