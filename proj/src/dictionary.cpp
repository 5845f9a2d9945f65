#include "compdoc/dictionary.hpp"

#include <cmath>

#include "compdoc/error.hpp"
#include "compdoc/evaluate.hpp"
#include "embedded_data.hpp"

namespace compdoc {

namespace {

constexpr int kMaxChain = 16;

double apply_conversion(const mathml::Expr& conversion, double x) {
  const Context ctx = Context().bind("value", Value::number(x));
  const Value v = eval(conversion, ctx);
  const Scalar& s = v.as_scalar();
  if (!s.dimension.dimensionless()) fail(Errc::dimension_mismatch, "unit conversion must be a plain number");
  return s.value;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(b)); }

}  // namespace

Dictionary::Dictionary(std::string prefix, std::string title)
    : prefix_(std::move(prefix)), title_(std::move(title)) {}

void Dictionary::add(DictionaryEntry entry) {
  if (entry.term.empty()) fail(Errc::structural, "dictionary '" + prefix_ + "': entry without a term");
  if (entries_.count(entry.term)) {
    fail(Errc::duplicate_id, "dictionary '" + prefix_ + "': duplicate term '" + entry.term + "'");
  }
  const bool self_canonical = entry.unit == Unit(entry.term);
  if (entry.conversion) {
    const auto& f = *entry.conversion;
    for (const auto& name : mathml::free_identifiers(f)) {
      if (name != "value") {
        fail(Errc::structural, "conversion for '" + entry.term + "' references '" + name + "'; only 'value' is allowed");
      }
    }
    const double b = apply_conversion(f, 0.0);
    const double a = apply_conversion(f, 1.0) - b;
    if (!std::isfinite(a) || !std::isfinite(b) || a == 0.0) {
      fail(Errc::structural, "conversion for '" + entry.term + "' is not an invertible affine map");
    }
    for (double x : {2.0, -7.25, 1000.0}) {
      if (!close(apply_conversion(f, x), a * x + b)) {
        fail(Errc::structural, "conversion for '" + entry.term + "' is not affine (scale + offset)");
      }
    }
    if (self_canonical && !(a == 1.0 && b == 0.0)) {
      fail(Errc::structural, "conversion of canonical unit '" + entry.term + "' must be the identity");
    }
    entry.scale = a;
    entry.offset = b;
  }
  const std::string key = entry.term;
  entries_.emplace(key, std::move(entry));
}

const DictionaryEntry* Dictionary::find(std::string_view term) const {
  const auto it = entries_.find(term);
  return it == entries_.end() ? nullptr : &it->second;
}

Dictionary Dictionary::from_element(const xml::Element& element) {
  const auto ns = xml::kDeXMLNamespace;
  if (!element.is(ns, "dictionary")) {
    fail(Errc::structural, "expected sem:dictionary, found " + element.name());
  }
  const auto* prefix = element.attribute("prefix");
  if (prefix == nullptr || prefix->empty()) fail(Errc::structural, "sem:dictionary requires a prefix attribute");
  const auto* title = element.attribute("title");
  Dictionary dict(*prefix, title ? *title : std::string{});
  for (const xml::Element* child : element.child_elements()) {
    if (!child->is(ns, "entry")) continue;
    DictionaryEntry entry;
    if (const auto* t = child->attribute("term")) entry.term = *t;
    if (const auto* d = child->attribute("dimension")) entry.dimension = Dimension::parse(*d);
    if (const auto* u = child->attribute("unit")) entry.unit = Unit::parse(*u);
    if (const auto* desc = child->first_child(ns, "description")) entry.description = desc->text();
    if (const auto* conv = child->first_child(ns, "conversion")) {
      const auto kids = conv->child_elements();
      if (kids.size() != 1) fail(Errc::structural, "sem:conversion of '" + entry.term + "' must hold one expression");
      entry.conversion = mathml::from_element(*kids[0]);
    }
    dict.add(std::move(entry));
  }
  return dict;
}

Dictionary Dictionary::parse(std::string_view xml_text) {
  const auto root = xml::parse(xml_text, "dictionary");
  return from_element(*root);
}

// ---------------------------------------------------------------------------

const DictionarySet& DictionarySet::builtin() {
  static const DictionarySet set = [] {
    DictionarySet s;
    s.add(std::make_shared<const Dictionary>(Dictionary::parse(embedded::units_dictionary())));
    s.add(std::make_shared<const Dictionary>(Dictionary::parse(embedded::ff_dictionary())));
    return s;
  }();
  return set;
}

void DictionarySet::add(std::shared_ptr<const Dictionary> dictionary) {
  dicts_.push_back(std::move(dictionary));
  const Dictionary& d = *dicts_.back();
  // Quantity entries must agree with the dimension their unit implies.
  for (const auto& [term, entry] : d.entries()) {
    ResolvedUnit r;
    try {
      r = resolve(entry.unit);
    } catch (const Error& e) {
      if (d.prefix() == "units") throw;
      continue;  // unit dictionary not loaded (yet); checked on use
    }
    if (!(r.dimension == entry.dimension)) {
      dicts_.pop_back();
      fail(Errc::dimension_mismatch, "dictionary entry '" + d.prefix() + ":" + term + "' declares " +
                                         entry.dimension.to_string() + " but its unit " + entry.unit.to_string() +
                                         " is " + r.dimension.to_string());
    }
  }
}

const DictionaryEntry* DictionarySet::find_term(std::string_view dict_ref) const {
  const auto colon = dict_ref.find(':');
  if (colon == std::string_view::npos) return nullptr;
  const std::string_view prefix = dict_ref.substr(0, colon);
  const std::string_view term = dict_ref.substr(colon + 1);
  for (auto it = dicts_.rbegin(); it != dicts_.rend(); ++it) {
    if ((*it)->prefix() != prefix) continue;
    if (const auto* e = (*it)->find(term)) return e;
  }
  return nullptr;
}

const DictionaryEntry* DictionarySet::find_unit(std::string_view name) const {
  for (auto it = dicts_.rbegin(); it != dicts_.rend(); ++it) {
    if ((*it)->prefix() != "units") continue;
    if (const auto* e = (*it)->find(name)) return e;
  }
  return nullptr;
}

ResolvedUnit DictionarySet::resolve(const Unit& unit) const {
  ResolvedUnit out;
  const bool single = unit.factors().size() == 1 && unit.factors().front().second == 1;
  for (const auto& [name, exponent] : unit.factors()) {
    const DictionaryEntry* entry = find_unit(name);
    if (entry == nullptr) fail(Errc::unknown_unit, "unknown unit '" + name + "'");
    double scale = 1.0, offset = 0.0;
    const Dimension dim = entry->dimension;
    int hops = 0;
    while (!(entry->unit == Unit(entry->term))) {
      if (++hops > kMaxChain) fail(Errc::unknown_unit, "conversion chain of '" + name + "' does not terminate");
      scale = entry->scale * scale;
      offset = entry->scale * offset + entry->offset;
      if (entry->unit.factors().size() != 1 || entry->unit.factors().front().second != 1) {
        fail(Errc::unknown_unit, "unit '" + entry->term + "' must convert to a single named unit");
      }
      const std::string& next = entry->unit.factors().front().first;
      const DictionaryEntry* target = find_unit(next);
      if (target == nullptr) fail(Errc::unknown_unit, "unknown unit '" + next + "' (target of '" + entry->term + "')");
      if (!(target->dimension == dim)) {
        fail(Errc::dimension_mismatch, "unit '" + entry->term + "' converts across dimensions");
      }
      entry = target;
    }
    if (offset != 0.0 && !single) {
      fail(Errc::unknown_unit, "affine unit '" + name + "' cannot appear in a compound unit");
    }
    out.dimension = out.dimension * dim.pow(exponent);
    out.canonical = out.canonical * Unit(entry->term).pow(exponent);
    out.scale *= std::pow(scale, exponent);
    out.offset = offset;
  }
  return out;
}

Scalar DictionarySet::canonical(double value, const Unit& unit) const {
  const ResolvedUnit r = resolve(unit);
  return Scalar{value * r.scale + r.offset, r.dimension, r.canonical};
}

Scalar convert(const Scalar& v, std::string_view target_unit, const DictionarySet& dicts) {
  const Unit target = Unit::parse(target_unit);
  const ResolvedUnit from = dicts.resolve(v.unit);
  const ResolvedUnit to = dicts.resolve(target);
  if (!(from.dimension == to.dimension)) {
    fail(Errc::dimension_mismatch, "cannot convert " + v.unit.to_string() + " (" + from.dimension.to_string() +
                                       ") to " + target.to_string() + " (" + to.dimension.to_string() + ")");
  }
  if (!(from.canonical == to.canonical)) {
    fail(Errc::dimension_mismatch, "no conversion chain between " + v.unit.to_string() + " and " + target.to_string());
  }
  if (v.unit == target) return Scalar{v.value, to.dimension, target};
  const double canonical = v.value * from.scale + from.offset;
  return Scalar{(canonical - to.offset) / to.scale, to.dimension, target};
}

}  // namespace compdoc
