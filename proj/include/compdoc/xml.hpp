#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace compdoc::xml {

inline constexpr std::string_view kMathMLNamespace = "http://www.w3.org/1998/Math/MathML";
inline constexpr std::string_view kCMLNamespace = "http://www.xml-cml.org/schema";
inline constexpr std::string_view kDeXMLNamespace = "urn:compdoc:dexml:1";

struct Attribute {
  std::string name;
  std::string value;
  friend bool operator==(const Attribute&, const Attribute&) = default;
};

class Element;

/// A child slot: either an element (owned) or a run of character data.
struct Child {
  std::unique_ptr<Element> element;
  std::string text;

  bool is_element() const noexcept { return element != nullptr; }
};

/// Mutable XML element with owned children and a non-owning parent link.
/// Namespaces are kept exactly as written (qualified names plus xmlns
/// attributes) and resolved on demand by walking the ancestor chain.
class Element {
 public:
  explicit Element(std::string name);
  ~Element();

  Element(const Element&) = delete;
  Element& operator=(const Element&) = delete;

  const std::string& name() const noexcept { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }
  std::string_view prefix() const;
  std::string_view local_name() const;

  /// Namespace URI of this element's name; empty when unqualified and no
  /// default namespace is in scope.
  std::string namespace_uri() const;
  std::optional<std::string> lookup_namespace(std::string_view prefix) const;
  /// Prefix bound to `uri` in scope here ("" for a default namespace).
  std::optional<std::string> prefix_for(std::string_view uri) const;
  bool is(std::string_view ns_uri, std::string_view local) const;

  const std::vector<Attribute>& attributes() const noexcept { return attributes_; }
  const std::string* attribute(std::string_view name) const;
  /// Attribute lookup by namespace URI and local name (prefixed attributes only).
  const std::string* attribute_ns(std::string_view ns_uri, std::string_view local) const;
  bool has_attribute(std::string_view name) const { return attribute(name) != nullptr; }
  void set_attribute(std::string_view name, std::string value);
  bool remove_attribute(std::string_view name);

  Element* parent() noexcept { return parent_; }
  const Element* parent() const noexcept { return parent_; }
  const Element& root() const;
  Element& root();

  const std::vector<Child>& children() const noexcept { return children_; }
  std::vector<Element*> child_elements();
  std::vector<const Element*> child_elements() const;
  const Element* first_child(std::string_view ns_uri, std::string_view local) const;

  Element& append(std::unique_ptr<Element> child);
  Element& insert(std::size_t index, std::unique_ptr<Element> child);
  void append_text(std::string text);
  void clear_children();
  /// Removes this element from its parent and hands back ownership.
  std::unique_ptr<Element> detach();
  /// Puts `replacement` where this element sits; returns the removed element.
  std::unique_ptr<Element> replace_with(std::unique_ptr<Element> replacement);
  std::size_t index_in_parent() const;

  /// Concatenated direct character data.
  std::string text() const;
  void set_text(std::string text);
  /// Rewrites each direct character-data run in place.
  void rewrite_text(const std::function<std::string(const std::string&)>& f);

  std::unique_ptr<Element> clone() const;
  /// Copies every in-scope namespace declaration onto this element so the
  /// subtree stays self-describing after being moved or written alone.
  void materialize_namespaces();

  int line() const noexcept { return line_; }
  void set_line(int line) noexcept { line_ = line; }

 private:
  std::string name_;
  std::vector<Attribute> attributes_;
  std::vector<Child> children_;
  Element* parent_ = nullptr;
  int line_ = 0;
};

/// Parses a document; whitespace-only character data is dropped. Errors
/// carry `source:line:column`.
std::unique_ptr<Element> parse(std::string_view text, std::string_view source_name = "input");

struct SerializeOptions {
  bool declaration = true;
  bool indent = true;
};

/// Canonical form: attributes sorted by name, two-space indentation,
/// elements holding only text written inline.
std::string serialize(const Element& element, SerializeOptions options = {});

/// Structural equality ignoring attribute order and surrounding whitespace in text.
bool structurally_equal(const Element& a, const Element& b);

/// Human-readable location such as `/sem:computationalDocument/sem:computation[2]`.
std::string path_of(const Element& element);

/// Deep copy of `element` carrying every namespace declaration in scope at
/// its original position.
std::unique_ptr<Element> standalone_copy(const Element& element);

std::string escape_text(std::string_view text);
std::string escape_attribute(std::string_view text);

}  // namespace compdoc::xml
