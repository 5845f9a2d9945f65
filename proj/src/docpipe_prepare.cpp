#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "compdoc/docpipe.hpp"
#include "docpipe_internal.hpp"

namespace fs = std::filesystem;

namespace compdoc::docpipe {

using xml::Element;

namespace detail {

namespace {

template <typename E>
void collect(E& e, std::vector<E*>& out) {
  out.push_back(&e);
  for (E* c : e.child_elements()) collect(*c, out);
}

}  // namespace

std::vector<Element*> descendants_or_self(Element& root) {
  std::vector<Element*> out;
  collect(root, out);
  return out;
}

std::vector<const Element*> descendants_or_self(const Element& root) {
  std::vector<const Element*> out;
  collect(root, out);
  return out;
}

bool is_sem(const Element& e, std::string_view local) { return e.is(xml::kDeXMLNamespace, local); }

const std::string* sem_attribute(const Element& e, std::string_view local) {
  return e.attribute_ns(xml::kDeXMLNamespace, local);
}

void set_sem_attribute(Element& e, std::string_view local, std::string value) {
  const auto prefix = e.prefix_for(xml::kDeXMLNamespace);
  if (prefix && !prefix->empty()) {
    e.set_attribute(*prefix + ":" + std::string(local), std::move(value));
    return;
  }
  e.set_attribute("xmlns:sem", std::string(xml::kDeXMLNamespace));
  e.set_attribute("sem:" + std::string(local), std::move(value));
}

Element& append_child(Element& parent, std::string_view uri, std::string_view preferred, std::string_view local) {
  const auto prefix = parent.prefix_for(uri);
  if (prefix) {
    return parent.append(std::make_unique<Element>(prefix->empty() ? std::string(local) : *prefix + ":" + std::string(local)));
  }
  Element& e = parent.append(std::make_unique<Element>(std::string(preferred) + ":" + std::string(local)));
  e.set_attribute("xmlns:" + std::string(preferred), std::string(uri));
  return e;
}

std::string where(const Element& e) {
  std::string out = xml::path_of(e);
  if (e.line() > 0) out += " (line " + std::to_string(e.line()) + ")";
  return out;
}

}  // namespace detail

using namespace detail;

namespace {

std::string read_text(const fs::path& path, Errc code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(code, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool contains(const Element& ancestor, const Element& e) {
  for (const Element* p = &e; p != nullptr; p = p->parent()) {
    if (p == &ancestor) return true;
  }
  return false;
}

Element* find_id(Element& root, std::string_view id) {
  for (Element* e : descendants_or_self(root)) {
    if (const auto* v = e->attribute("id"); v != nullptr && *v == id) return e;
  }
  return nullptr;
}

}  // namespace

ComputationalDocument parse_document(std::string_view text, std::string location) {
  ComputationalDocument doc;
  doc.root = xml::parse(text, location);
  if (!is_sem(*doc.root, "computationalDocument")) {
    fail(Errc::structural, location + ": root element must be sem:computationalDocument, found " + doc.root->name());
  }
  doc.location = std::move(location);
  return doc;
}

ComputationalDocument load_document(const fs::path& path) {
  const fs::path full = fs::weakly_canonical(fs::absolute(path));
  ComputationalDocument doc = parse_document(read_text(full, Errc::io), full.string());
  doc.path = full;
  return doc;
}

NamespaceMap namespaces_at(const Element& element) {
  NamespaceMap ns = default_namespaces();
  std::vector<const Element*> chain;
  for (const Element* e = &element; e != nullptr; e = e->parent()) chain.push_back(e);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    for (const auto& a : (*it)->attributes()) {
      if (a.name.rfind("xmlns:", 0) == 0) ns[a.name.substr(6)] = a.value;
    }
  }
  return ns;
}

// ---------------------------------------------------------------------------
// Symbols

namespace {

class SymbolTable {
 public:
  void define(const Element& def) {
    const auto* name = def.attribute("name");
    if (name == nullptr || name->empty()) fail(Errc::structural, where(def) + ": sem:variable needs a name");
    const auto* value = def.attribute("value");
    if (!defs_.emplace(*name, Def{value ? *value : def.text(), &def}).second) {
      fail(Errc::duplicate_variable, where(def) + ": variable '" + *name + "' is already defined at " +
                                         where(*defs_.at(*name).element));
    }
  }

  const std::string& value(const std::string& name, const Element& used_at) {
    std::vector<std::string> chain;
    return resolve(name, chain, used_at);
  }

  /// Replaces every `${name}` in `text`.
  std::string substitute(const std::string& text, const Element& used_at, std::vector<std::string>* chain = nullptr) {
    std::string out;
    std::size_t pos = 0;
    for (;;) {
      const auto open = text.find("${", pos);
      const auto close = open == std::string::npos ? std::string::npos : text.find('}', open + 2);
      if (close == std::string::npos) {
        out.append(text, pos);
        return out;
      }
      out.append(text, pos, open - pos);
      const std::string name = text.substr(open + 2, close - open - 2);
      std::vector<std::string> local;
      out += resolve(name, chain ? *chain : local, used_at);
      pos = close + 1;
    }
  }

  std::map<std::string, std::string, std::less<>> resolved_all() {
    for (const auto& [name, def] : defs_) value(name, *def.element);
    return resolved_;
  }

 private:
  struct Def {
    std::string raw;
    const Element* element;
  };

  const std::string& resolve(const std::string& name, std::vector<std::string>& chain, const Element& used_at) {
    if (const auto it = resolved_.find(name); it != resolved_.end()) return it->second;
    const auto def = defs_.find(name);
    if (def == defs_.end()) {
      fail(Errc::undefined_variable, "undefined variable '" + name + "' used at " + where(used_at));
    }
    if (std::find(chain.begin(), chain.end(), name) != chain.end()) {
      std::string msg = "cyclic variable definition: ";
      for (const auto& c : chain) msg += c + " -> ";
      fail(Errc::symbol_cycle, msg + name);
    }
    chain.push_back(name);
    std::string v = substitute(def->second.raw, *def->second.element, &chain);
    chain.pop_back();
    return resolved_.emplace(name, std::move(v)).first->second;
  }

  std::map<std::string, Def, std::less<>> defs_;
  std::map<std::string, std::string, std::less<>> resolved_;
};

}  // namespace

void resolve_symbols(ComputationalDocument& doc) {
  SymbolTable table;
  const auto all = descendants_or_self(*doc.root);
  for (const Element* e : all) {
    if (is_sem(*e, "variable")) table.define(*e);
  }
  doc.symbols = table.resolved_all();
  for (Element* e : all) {
    const auto attrs = e->attributes();
    for (const auto& a : attrs) {
      if (a.name == "xmlns" || a.name.rfind("xmlns:", 0) == 0) continue;
      if (a.value.find("${") == std::string::npos) continue;
      e->set_attribute(a.name, table.substitute(a.value, *e));
    }
    e->rewrite_text([&](const std::string& t) {
      return t.find("${") == std::string::npos ? t : table.substitute(t, *e);
    });
  }
}

// ---------------------------------------------------------------------------
// Transclusion

namespace {

std::string join_url(const std::string& base, const std::string& href) {
  if (!href.empty() && href[0] == '/') {
    const auto path_start = base.find('/', base.find("://") + 3);
    return base.substr(0, path_start) + href;
  }
  return base.substr(0, base.rfind('/') + 1) + href;
}

std::string provenance_summary(const Element& e) {
  std::string out;
  const auto add = [&](std::string_view key) {
    if (const auto* v = sem_attribute(e, key)) {
      if (!out.empty()) out += ' ';
      out += std::string(key) + "=" + *v;
    }
  };
  add("href");
  add("source");
  add("digest");
  add("retrieved");
  if (const auto* up = sem_attribute(e, "upstream")) out += " upstream=[" + *up + "]";
  return out;
}

void remove_sem_attribute(Element& e, std::string_view local) {
  const auto attrs = e.attributes();
  for (const auto& a : attrs) {
    const auto colon = a.name.find(':');
    if (colon == std::string::npos || a.name.compare(colon + 1, std::string::npos, local) != 0) continue;
    if (e.lookup_namespace(a.name.substr(0, colon)) == std::string(xml::kDeXMLNamespace)) e.remove_attribute(a.name);
  }
}

class Transcluder {
 public:
  Transcluder(const Resolver& resolver, int max_depth) : resolver_(resolver), max_depth_(max_depth) {}

  struct Frame {
    std::string base;       // location of the file being expanded
    std::string recorded;   // how that file is recorded in provenance
    Element* file_root;     // for same-file #id references
    std::vector<std::string> chain;
  };

  void expand(Element& scope, const Frame& frame) {
    for (Element* child : scope.child_elements()) {
      if (child->attribute("href") != nullptr) {
        child->replace_with(include(*child, frame));
      } else {
        expand(*child, frame);
      }
    }
  }

 private:
  std::unique_ptr<Element> include(Element& at, const Frame& frame) {
    const std::string href = *at.attribute("href");
    const auto hash = href.find('#');
    const std::string file = href.substr(0, hash);
    const std::string fragment = hash == std::string::npos ? "" : href.substr(hash + 1);
    if (file.empty() && fragment.empty()) fail(Errc::unreachable_href, where(at) + ": empty href");

    Frame next;
    std::unique_ptr<Element> parsed;
    std::string content, retrieved;
    const Element* target = nullptr;
    if (file.empty()) {
      next.base = frame.base;
      next.recorded = frame.recorded;
      next.file_root = frame.file_root;
      target = find_id(*frame.file_root, fragment);
      if (target == nullptr) fail(Errc::unreachable_href, where(at) + ": no element with id '" + fragment + "'");
      if (contains(*target, at)) {
        fail(Errc::transclusion_cycle, where(at) + ": '" + href + "' refers to an element containing the reference");
      }
      content = xml::serialize(*target);
    } else {
      Fetched got;
      try {
        got = resolver_(file, frame.base);
      } catch (const Error& e) {
        fail(e.code(), where(at) + ": " + e.what());
      }
      parsed = xml::parse(got.content, got.location);
      next.base = got.location;
      next.recorded = got.recorded;
      next.file_root = parsed.get();
      target = fragment.empty() ? parsed.get() : find_id(*parsed, fragment);
      if (target == nullptr) {
        fail(Errc::unreachable_href, where(at) + ": " + got.location + " has no element with id '" + fragment + "'");
      }
      content = std::move(got.content);
      retrieved = std::move(got.retrieved);
    }

    const std::string key = next.base + "#" + fragment;
    next.chain = frame.chain;
    if (std::find(next.chain.begin(), next.chain.end(), key) != next.chain.end()) {
      std::string msg = where(at) + ": inclusion cycle ";
      for (const auto& c : next.chain) msg += c + " -> ";
      fail(Errc::transclusion_cycle, msg + key);
    }
    next.chain.push_back(key);
    if (static_cast<int>(next.chain.size()) - 1 > max_depth_) {
      fail(Errc::transclusion_depth, where(at) + ": inclusion deeper than " + std::to_string(max_depth_) + " levels");
    }

    Element holder("holder");
    holder.append(xml::standalone_copy(*target));
    expand(holder, next);
    std::unique_ptr<Element> result = holder.child_elements().front()->detach();

    const std::string upstream = provenance_summary(*result);
    for (const char* key_name : {"href", "source", "digest", "retrieved", "upstream"}) remove_sem_attribute(*result, key_name);
    set_sem_attribute(*result, "href", href);
    set_sem_attribute(*result, "source", fragment.empty() ? next.recorded : next.recorded + "#" + fragment);
    set_sem_attribute(*result, "digest", "sha256:" + sha256_hex(content));
    if (!retrieved.empty()) set_sem_attribute(*result, "retrieved", retrieved);
    if (!upstream.empty()) set_sem_attribute(*result, "upstream", upstream);
    return result;
  }

  const Resolver& resolver_;
  int max_depth_;
};

}  // namespace

fs::path detail::document_dir(const ComputationalDocument& doc) {
  if (!doc.path.empty()) return doc.path.parent_path();
  const fs::path parent = fs::path(doc.location).parent_path();
  return fs::weakly_canonical(fs::absolute(parent.empty() ? fs::current_path() : parent));
}

Resolver default_resolver(fs::path root_dir, bool allow_remote) {
  root_dir = fs::weakly_canonical(fs::absolute(root_dir));
  return [root_dir, allow_remote](const std::string& href, const std::string& base) -> Fetched {
    std::string url;
    if (is_remote(href)) {
      url = href;
    } else if (is_remote(base)) {
      url = join_url(base, href);
    }
    if (!url.empty()) {
      if (!allow_remote) fail(Errc::unreachable_href, url + ": remote sources are disabled");
      std::string content = fetch_url(url);
      return {std::move(content), url, url, utc_now()};
    }
    fs::path p(href);
    if (p.is_relative()) {
      const fs::path parent = fs::path(base).parent_path();
      p = (parent.empty() ? fs::current_path() : parent) / p;
    }
    p = fs::weakly_canonical(fs::absolute(p));
    std::ifstream in(p, std::ios::binary);
    if (!in || fs::is_directory(p)) fail(Errc::unreachable_href, "cannot read '" + href + "' (" + p.string() + ")");
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string recorded = p.lexically_relative(root_dir).generic_string();
    if (recorded.empty()) recorded = p.generic_string();
    return {ss.str(), p.string(), std::move(recorded), ""};
  };
}

Sink file_sink(fs::path output_dir) {
  return [output_dir](const fs::path& path, const std::string& content) {
    const fs::path full = path.is_absolute() ? path : output_dir / path;
    std::error_code ec;
    if (full.has_parent_path()) fs::create_directories(full.parent_path(), ec);
    std::ofstream out(full, std::ios::binary);
    out << content;
    if (!out) fail(Errc::io, "cannot write " + full.string());
  };
}

void transclude(ComputationalDocument& doc, const TranscludeOptions& options) {
  const Resolver resolver = options.resolver ? options.resolver : default_resolver(document_dir(doc), false);
  Transcluder t(resolver, options.max_depth);
  Transcluder::Frame root;
  root.base = doc.location;
  root.recorded = fs::path(doc.location).filename().generic_string();
  root.file_root = doc.root.get();
  root.chain = {doc.location + "#"};
  if (doc.root->attribute("href") != nullptr) fail(Errc::structural, "the document root cannot carry href");
  t.expand(*doc.root, root);
}

// ---------------------------------------------------------------------------
// Edits

namespace {

std::vector<Element*> select_from(const Element& op, std::string_view attr, Element& context) {
  const auto* path = op.attribute(attr);
  if (path == nullptr) fail(Errc::edit_target, where(op) + ": missing '" + std::string(attr) + "' attribute");
  return Selector::compile(*path, namespaces_at(op)).select(context);
}

std::vector<Element*> require_some(std::vector<Element*> found, const Element& op, std::string_view attr) {
  if (found.empty()) {
    fail(Errc::edit_target, where(op) + ": " + std::string(attr) + "=\"" + *op.attribute(attr) + "\" matches nothing");
  }
  return found;
}

Element& require_one(std::vector<Element*> found, const Element& op, std::string_view attr) {
  if (found.size() != 1) {
    fail(Errc::edit_target, where(op) + ": " + std::string(attr) + "=\"" + *op.attribute(attr) + "\" must match one element, matched " +
                                std::to_string(found.size()));
  }
  return *found.front();
}

/// Drops elements whose ancestor is also selected.
std::vector<Element*> outermost(const std::vector<Element*>& found) {
  const std::set<const Element*> all(found.begin(), found.end());
  std::vector<Element*> out;
  for (Element* e : found) {
    bool nested = false;
    for (const Element* p = e->parent(); p != nullptr && !nested; p = p->parent()) nested = all.count(p) > 0;
    if (!nested) out.push_back(e);
  }
  return out;
}

void check_removable(const Element& target, const Element& op) {
  if (target.parent() == nullptr) fail(Errc::edit_target, where(op) + ": cannot remove the document root");
  if (contains(target, op)) fail(Errc::edit_target, where(op) + ": target contains the editor itself");
}

void run_operation(Element& op, Element& context) {
  if (is_sem(op, "delete")) {
    auto targets = outermost(require_some(select_from(op, "select", context), op, "select"));
    for (Element* t : targets) check_removable(*t, op);
    for (auto it = targets.rbegin(); it != targets.rend(); ++it) (*it)->detach();
  } else if (is_sem(op, "copy")) {
    const auto sources = require_some(select_from(op, "select", context), op, "select");
    Element& dest = require_one(select_from(op, "to", context), op, "to");
    std::vector<std::unique_ptr<Element>> copies;
    for (const Element* s : sources) {
      auto c = xml::standalone_copy(*s);
      set_sem_attribute(*c, "copyOf", xml::path_of(*s));
      copies.push_back(std::move(c));
    }
    for (auto& c : copies) dest.append(std::move(c));
  } else if (is_sem(op, "move")) {
    auto sources = outermost(require_some(select_from(op, "select", context), op, "select"));
    Element& dest = require_one(select_from(op, "to", context), op, "to");
    for (Element* s : sources) {
      check_removable(*s, op);
      if (contains(*s, dest)) fail(Errc::edit_target, where(op) + ": destination lies inside " + xml::path_of(*s));
    }
    for (Element* s : sources) {
      s->materialize_namespaces();
      dest.append(s->detach());
    }
  } else if (is_sem(op, "transform")) {
    const auto targets = require_some(select_from(op, "select", context), op, "select");
    const auto* rename = op.attribute("rename");
    const auto* attribute = op.attribute("attribute");
    if ((rename == nullptr) == (attribute == nullptr)) {
      fail(Errc::edit_target, where(op) + ": sem:transform needs exactly one of rename or attribute");
    }
    for (Element* t : targets) {
      if (rename != nullptr) {
        const auto colon = rename->find(':');
        if (colon != std::string::npos && !op.lookup_namespace(rename->substr(0, colon))) {
          fail(Errc::edit_target, where(op) + ": prefix of '" + *rename + "' is not bound");
        }
        if (colon != std::string::npos && !t->lookup_namespace(rename->substr(0, colon))) {
          const std::string prefix = rename->substr(0, colon);
          t->set_attribute("xmlns:" + prefix, *op.lookup_namespace(prefix));
        }
        t->set_name(*rename);
      } else {
        const auto* value = op.attribute("value");
        t->set_attribute(*attribute, value ? *value : "");
      }
      set_sem_attribute(*t, "transformed", where(op));
    }
  } else {
    fail(Errc::edit_target, where(op) + ": unknown edit operation " + op.name());
  }
}

}  // namespace

void apply_edits(ComputationalDocument& doc) {
  // Rescan after each editor: an edit may remove or add later editors.
  for (;;) {
    Element* next = nullptr;
    for (Element* e : descendants_or_self(*doc.root)) {
      const auto* status = sem_attribute(*e, "status");
      if (is_sem(*e, "editor") && !(status && *status == "applied")) {
        next = e;
        break;
      }
    }
    if (next == nullptr) return;
    set_sem_attribute(*next, "status", "applied");
    for (Element* op : next->child_elements()) run_operation(*op, *next);
  }
}

// ---------------------------------------------------------------------------
// Decoration

void decorate(ComputationalDocument& doc) {
  doc.molecules.clear();
  doc.forcefields.clear();
  for (const Element* e : descendants_or_self(std::as_const(*doc.root))) {
    try {
      if (e->is(xml::kCMLNamespace, "molecule")) {
        doc.molecules[e] = std::make_shared<const chem::Molecule>(chem::from_element(*e));
      } else if (e->is(xml::kCMLNamespace, "forcefield")) {
        doc.forcefields[e] = std::make_shared<const ff::ForcefieldParams>(ff::from_element(*e));
      }
    } catch (const Error& err) {
      fail(Errc::decoration, where(*e) + ": " + std::string(to_string(err.code())) + ": " + err.what());
    }
  }
}

}  // namespace compdoc::docpipe
