#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "compdoc/docpipe.hpp"
#include "docpipe_internal.hpp"

namespace fs = std::filesystem;

namespace compdoc::docpipe {

using xml::Element;
using namespace detail;

namespace {

const DictionarySet& dicts() { return DictionarySet::builtin(); }

std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string id_of(const Element& e) {
  if (const auto* id = e.attribute("id")) return *id;
  return xml::path_of(e);
}

// ---------------------------------------------------------------------------
// Bindings

const std::map<std::string, std::string, std::less<>>& set_kinds() {
  static const std::map<std::string, std::string, std::less<>> kinds = {
      {"atoms", "atom"}, {"bonds", "bond"}, {"angles", "angle"}, {"dihedrals", "dihedral"}, {"pairs", "pair"}, {"molecule", "molecule"}};
  return kinds;
}

const std::set<std::string, std::less<>>& constant_refs() {
  static const std::set<std::string, std::less<>> refs = {"ff:ke", "ff:epsilon", "ff:scale14vdw", "ff:scale14elec"};
  return refs;
}

struct Binding {
  enum class Source { set, dict_ref, value, select };
  const Element* element = nullptr;
  std::string name;
  Source source = Source::value;
  std::string arg;
};

std::vector<Binding> read_bindings(const Element& scope) {
  std::vector<Binding> out;
  std::set<std::string> names;
  for (const Element* b : scope.child_elements()) {
    if (!is_sem(*b, "binding")) continue;
    Binding binding;
    binding.element = b;
    const auto* name = b->attribute("name");
    if (name == nullptr || name->empty()) fail(Errc::structural, where(*b) + ": sem:binding needs a name");
    binding.name = *name;
    if (!names.insert(*name).second) fail(Errc::structural, where(*b) + ": '" + *name + "' is bound twice");
    int sources = 0;
    const auto take = [&](const char* attr, Binding::Source s) {
      if (const auto* v = b->attribute(attr)) {
        ++sources;
        binding.source = s;
        binding.arg = *v;
      }
    };
    take("set", Binding::Source::set);
    take("dictRef", Binding::Source::dict_ref);
    take("value", Binding::Source::value);
    take("select", Binding::Source::select);
    if (sources != 1) fail(Errc::structural, where(*b) + ": sem:binding needs exactly one of set, dictRef, value, select");
    if (binding.source == Binding::Source::set && !set_kinds().contains(binding.arg)) {
      fail(Errc::structural, where(*b) + ": unknown set '" + binding.arg + "'");
    }
    out.push_back(std::move(binding));
  }
  return out;
}

Value dict_ref_value(const std::string& ref, const chem::Molecule* m, const ff::ForcefieldParams* params) {
  if (params != nullptr && constant_refs().contains(ref)) return domain::forcefield_constant(*params, ref);
  if (m != nullptr) {
    for (const auto& p : m->properties) {
      if (p.dict_ref == ref) return Value::scalar(chem::property_value(p, dicts()));
    }
  }
  fail(Errc::missing_parameter, "no value for dictRef '" + ref + "'" + (m ? " on molecule '" + m->id + "'" : ""));
}

Value number_value(double v, const Element& binding) {
  if (const auto* units = binding.attribute("units"); units && !units->empty()) {
    return Value::scalar(domain::quantity(v, *units));
  }
  return Value::number(v);
}

Value select_value(const Binding& b, const Element& context, const ComputationalDocument& doc) {
  const Selector sel = Selector::compile(b.arg, namespaces_at(*b.element));
  std::vector<Value> items;
  const auto add_number = [&](const std::string& text) {
    const auto v = parse_number(text);
    if (!v) fail(Errc::type_error, where(*b.element) + ": selected value '" + text + "' is not a number");
    items.push_back(number_value(*v, *b.element));
  };
  if (sel.terminal_attribute()) {
    for (const auto& s : sel.select_strings(context)) add_number(s);
  } else {
    for (const Element* e : sel.select(context)) {
      if (const auto it = doc.molecules.find(e); it != doc.molecules.end()) {
        items.push_back(Value::object(std::make_shared<domain::MoleculeObject>(it->second)));
      } else {
        add_number(e->text());
      }
    }
  }
  return Value::sequence(std::move(items));
}

Context function_context(const domain::ForcefieldPtr& params) {
  static const domain::ForcefieldPtr empty = std::make_shared<const ff::ForcefieldParams>();
  return domain::register_forcefield_functions(domain::register_chem_functions(Context()), params ? params : empty);
}

Context bind_all(Context ctx, const std::vector<Binding>& bindings, const ComputationalDocument& doc,
                 const Element& context, const domain::MoleculePtr& m, const domain::ForcefieldPtr& params) {
  std::optional<domain::MoleculeSets> sets;
  for (const auto& b : bindings) {
    Value v;
    switch (b.source) {
      case Binding::Source::set: {
        if (!m) fail(Errc::computation, where(*b.element) + ": set '" + b.arg + "' needs a molecule target");
        if (!sets) sets = domain::molecule_sets(m);
        const std::map<std::string, const Value*, std::less<>> by_name = {
            {"atoms", &sets->atoms},   {"bonds", &sets->bonds}, {"angles", &sets->angles},
            {"dihedrals", &sets->dihedrals}, {"pairs", &sets->pairs}, {"molecule", &sets->molecule}};
        v = *by_name.at(b.arg);
        break;
      }
      case Binding::Source::dict_ref:
        v = dict_ref_value(b.arg, m.get(), params.get());
        break;
      case Binding::Source::value: {
        const auto n = parse_number(b.arg);
        if (!n) fail(Errc::type_error, where(*b.element) + ": value '" + b.arg + "' is not a number");
        v = number_value(*n, *b.element);
        break;
      }
      case Binding::Source::select:
        v = select_value(b, context, doc);
        break;
    }
    ctx = ctx.bind(b.name, std::move(v));
  }
  return ctx;
}

// ---------------------------------------------------------------------------
// Computation plans

const Element* find_form_element(const ComputationalDocument& doc, const Element& comp) {
  const Element* form = nullptr;
  if (const auto* ref = comp.attribute("form")) {
    for (const Element* e : descendants_or_self(*doc.root)) {
      const auto* id = e->attribute("id");
      if (id && *id == *ref && is_sem(*e, "functionalForm")) {
        form = e;
        break;
      }
    }
    if (form == nullptr) fail(Errc::computation, where(comp) + ": no sem:functionalForm with id '" + *ref + "'");
  } else {
    for (const Element* c : comp.child_elements()) {
      if (is_sem(*c, "functionalForm")) {
        form = c;
        break;
      }
    }
    if (form == nullptr) fail(Errc::computation, where(comp) + ": no functional form");
  }
  const auto children = form->child_elements();
  if (children.empty()) fail(Errc::computation, where(*form) + ": functional form holds no MathML");
  return children.front();
}

mathml::Expr read_form(const ComputationalDocument& doc, const Element& comp) {
  const Element* math = find_form_element(doc, comp);
  try {
    return mathml::from_element(*math);
  } catch (const Error& e) {
    fail(e.code(), where(*math) + ": " + e.what());
  }
}

template <typename E>
std::vector<E*> select_targets(const Element& comp, E& context) {
  const auto* path = comp.attribute("targets");
  if (path == nullptr) return {};
  return Selector::compile(*path, namespaces_at(comp)).select(context);
}

domain::ForcefieldPtr select_forcefield(const ComputationalDocument& doc, const Element& comp) {
  const auto* path = comp.attribute("forcefield");
  if (path == nullptr) {
    if (doc.forcefields.size() == 1) return doc.forcefields.begin()->second;
    return nullptr;
  }
  const auto found = Selector::compile(*path, namespaces_at(comp)).select(comp);
  if (found.size() != 1) {
    fail(Errc::computation, where(comp) + ": forcefield=\"" + *path + "\" must match one element, matched " +
                                std::to_string(found.size()));
  }
  const auto it = doc.forcefields.find(found.front());
  if (it == doc.forcefields.end()) fail(Errc::computation, where(comp) + ": " + xml::path_of(*found.front()) + " is not a cml:forcefield");
  return it->second;
}

std::string mode_of(const Element& comp) {
  const auto* mode = comp.attribute("mode");
  const std::string m = mode ? *mode : "singlePoint";
  if (m != "singlePoint" && m != "optimize") fail(Errc::computation, where(comp) + ": unknown mode '" + m + "'");
  return m;
}

const DictionaryEntry* result_entry(const Element& comp) {
  const auto* ref = comp.attribute("resultDictRef");
  if (ref == nullptr) return nullptr;
  const auto* entry = dicts().find_term(*ref);
  if (entry == nullptr) fail(Errc::computation, where(comp) + ": resultDictRef '" + *ref + "' is not in any dictionary");
  return entry;
}

opt::OptConfig read_config(const Element& comp) {
  opt::OptConfig cfg;
  const Element* spec = nullptr;
  for (const Element* c : comp.child_elements()) {
    if (is_sem(*c, "optimizer")) spec = c;
  }
  if (spec != nullptr) {
    const auto real = [&](const char* attr, double& out) {
      if (const auto* v = spec->attribute(attr)) {
        const auto n = parse_number(*v);
        if (!n) fail(Errc::invalid_config, where(*spec) + ": " + attr + "='" + *v + "' is not a number");
        out = *n;
      }
    };
    real("initialStep", cfg.initial_step);
    real("stepShrink", cfg.step_shrink);
    real("minStep", cfg.min_step);
    real("convergence", cfg.convergence);
    double budget = static_cast<double>(cfg.max_evaluations);
    real("maxEvaluations", budget);
    if (!(budget >= 1) || budget != std::trunc(budget) || budget > 1e15) {
      fail(Errc::invalid_config, where(*spec) + ": maxEvaluations must be a positive integer");
    }
    cfg.max_evaluations = static_cast<std::size_t>(budget);
  }
  cfg.validate();
  return cfg;
}

Scalar finish_value(const Value& v, const DictionaryEntry* entry) {
  if (!v.is_scalar()) fail(Errc::type_error, "result is " + v.describe() + ", expected a scalar");
  Scalar s = v.as_scalar();
  if (entry != nullptr) s = convert(s, entry->unit.to_string(), dicts());
  if (!std::isfinite(s.value)) fail(Errc::numeric_domain, "result is not finite");
  return s;
}

void attach_property(Element& target, const Element& comp, const Scalar& s) {
  Element& prop = append_child(target, xml::kCMLNamespace, "cml", "property");
  if (const auto* ref = comp.attribute("resultDictRef")) prop.set_attribute("dictRef", *ref);
  set_sem_attribute(prop, "computation", id_of(comp));
  Element& scalar = append_child(prop, xml::kCMLNamespace, "cml", "scalar");
  if (!s.unit.empty()) scalar.set_attribute("units", s.unit.to_string());
  scalar.set_text(mathml::format_number(s.value));
}

domain::MoleculePtr target_molecule(const ComputationalDocument& doc, const Element& comp, const Element& target) {
  const auto it = doc.molecules.find(&target);
  if (it == doc.molecules.end()) {
    fail(Errc::computation, where(comp) + ": target " + xml::path_of(target) + " is not a decorated cml:molecule");
  }
  return it->second;
}

struct SinglePoint {
  Element* target;
  Scalar value;
};

void run_single_point(ComputationalDocument& doc, Element& comp, const mathml::Expr& form,
                      const std::vector<Element*>& targets, const std::vector<Binding>& bindings,
                      const domain::ForcefieldPtr& params, const DictionaryEntry* entry) {
  const Context functions = function_context(params);
  std::vector<SinglePoint> results;
  if (comp.attribute("targets") == nullptr) {
    const Context ctx = bind_all(functions, bindings, doc, comp, nullptr, params);
    results.push_back({&comp, finish_value(eval(form, ctx), entry)});
  }
  for (Element* t : targets) {
    const auto m = target_molecule(doc, comp, *t);
    try {
      const Context ctx = bind_all(functions, bindings, doc, *t, m, params);
      results.push_back({t, finish_value(eval(form, ctx), entry)});
    } catch (const Error& e) {
      fail(e.code(), "target " + xml::path_of(*t) + ": " + e.what());
    }
  }
  for (const auto& r : results) attach_property(*r.target, comp, r.value);
}

void run_optimize(ComputationalDocument& doc, Element& comp, const mathml::Expr& form,
                  const std::vector<Element*>& targets, const std::vector<Binding>& bindings,
                  const domain::ForcefieldPtr& params, const DictionaryEntry* entry) {
  const opt::OptConfig cfg = read_config(comp);
  if (targets.empty()) fail(Errc::computation, where(comp) + ": optimize mode needs targets");
  const Context functions = function_context(params);

  struct Outcome {
    Element* target;
    domain::MoleculePtr start;
    opt::OptTrace trace;
    Scalar final_energy;
  };
  std::vector<Outcome> outcomes;
  for (Element* t : targets) {
    const auto m0 = target_molecule(doc, comp, *t);
    const auto energy_at = [&](std::span<const double> x) {
      const auto m = std::make_shared<const chem::Molecule>(m0->with_coordinates(x));
      return finish_value(eval(form, bind_all(functions, bindings, doc, *t, m, params)), entry);
    };
    try {
      const Scalar start = energy_at(m0->coordinates());
      const auto energy = [&](std::span<const double> x) {
        try {
          return energy_at(x).value;
        } catch (const Error& e) {
          if (e.code() == Errc::degenerate_geometry || e.code() == Errc::numeric_domain) return std::nan("");
          throw;
        }
      };
      opt::OptTrace trace = opt::optimize(energy, m0->coordinates(), cfg);
      Scalar final_energy = start;
      final_energy.value = trace.energy;
      outcomes.push_back({t, m0, std::move(trace), final_energy});
    } catch (const Error& e) {
      fail(e.code(), "target " + xml::path_of(*t) + ": " + e.what());
    }
  }

  for (auto& o : outcomes) {
    chem::Molecule moved = o.start->with_coordinates(o.trace.coords);
    moved.id = o.start->id + "_opt";
    moved.properties.clear();
    const auto prefix = o.target->parent()->prefix_for(xml::kCMLNamespace);
    chem::CmlWriteOptions options;
    options.prefix = prefix ? *prefix : "cml";
    options.declare_namespace = !prefix;
    Element& copy = o.target->parent()->insert(o.target->index_in_parent() + 1, chem::to_element(moved, options));
    set_sem_attribute(copy, "computation", id_of(comp));
    set_sem_attribute(copy, "derivedFrom", o.start->id);
    set_sem_attribute(copy, "converged", o.trace.converged ? "true" : "false");
    set_sem_attribute(copy, "reason", o.trace.reason);
    set_sem_attribute(copy, "evaluations", std::to_string(o.trace.evaluations));
    attach_property(copy, comp, o.final_energy);
    doc.molecules[&copy] = std::make_shared<const chem::Molecule>(chem::from_element(copy));
    doc.optimizations.push_back({id_of(comp), o.start->id, cfg, std::move(o.trace)});
  }
}

// ---------------------------------------------------------------------------
// Structural comparison for file asserts

std::map<std::pair<std::string, std::string>, std::string> plain_attributes(const Element& e) {
  std::map<std::pair<std::string, std::string>, std::string> out;
  for (const auto& a : e.attributes()) {
    if (a.name == "xmlns" || a.name.rfind("xmlns:", 0) == 0) continue;
    const auto colon = a.name.find(':');
    if (colon == std::string::npos) {
      out[{"", a.name}] = a.value;
    } else {
      out[{e.lookup_namespace(a.name.substr(0, colon)).value_or(a.name.substr(0, colon)), a.name.substr(colon + 1)}] =
          a.value;
    }
  }
  return out;
}

std::string trimmed(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

/// Same names (by namespace URI), attributes and text; prefixes and
/// namespace declarations may differ.
bool equivalent(const Element& a, const Element& b) {
  if (a.namespace_uri() != b.namespace_uri() || a.local_name() != b.local_name()) return false;
  if (plain_attributes(a) != plain_attributes(b)) return false;
  if (trimmed(a.text()) != trimmed(b.text())) return false;
  const auto ca = a.child_elements();
  const auto cb = b.child_elements();
  if (ca.size() != cb.size()) return false;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (!equivalent(*ca[i], *cb[i])) return false;
  }
  return true;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------------

Context binding_context(const Element& scope, const ComputationalDocument& doc, const Element* target,
                        const domain::ForcefieldPtr& forcefield) {
  domain::MoleculePtr m;
  if (target != nullptr) m = target_molecule(doc, scope, *target);
  return bind_all(function_context(forcefield), read_bindings(scope), doc, target ? *target : scope, m, forcefield);
}

void run_computations(ComputationalDocument& doc) {
  std::vector<Element*> computations;
  for (Element* e : descendants_or_self(*doc.root)) {
    if (is_sem(*e, "computation")) computations.push_back(e);
  }
  for (Element* comp : computations) {
    if (const auto* status = sem_attribute(*comp, "status"); status && *status == "complete") continue;
    try {
      const mathml::Expr form = read_form(doc, *comp);
      const auto bindings = read_bindings(*comp);
      const auto params = select_forcefield(doc, *comp);
      const auto* entry = result_entry(*comp);
      const auto targets = select_targets(*comp, *comp);
      if (comp->attribute("targets") != nullptr && targets.empty()) {
        fail(Errc::computation, where(*comp) + ": targets=\"" + *comp->attribute("targets") + "\" matches nothing");
      }
      if (mode_of(*comp) == "optimize") {
        run_optimize(doc, *comp, form, targets, bindings, params, entry);
      } else {
        run_single_point(doc, *comp, form, targets, bindings, params, entry);
      }
    } catch (const Error& e) {
      set_sem_attribute(*comp, "status", "failed");
      set_sem_attribute(*comp, "error", std::string(to_string(e.code())) + ": " + e.what());
      fail(e.code(), "computation '" + id_of(*comp) + "': " + e.what());
    }
    set_sem_attribute(*comp, "status", "complete");
  }
}

IntegrityReport check_integrity(const ComputationalDocument& doc) {
  IntegrityReport report;
  const auto add = [&](std::string kind, const Element& at, std::string message) {
    std::string location = where(at);
    if (message.starts_with(location + ": ")) message.erase(0, location.size() + 2);
    report.findings.push_back({std::move(kind), std::move(location), std::move(message)});
  };

  for (const Element* comp : descendants_or_self(*doc.root)) {
    if (is_sem(*comp, "assert")) {
      const bool value = comp->has_attribute("value"), file = comp->has_attribute("file");
      if (value == file) add("assert", *comp, "needs exactly one of value or file");
      if (const auto* sel = comp->attribute("select")) {
        try {
          Selector::compile(*sel, namespaces_at(*comp));
        } catch (const Error& e) {
          add("selector", *comp, e.what());
        }
      } else {
        add("assert", *comp, "missing select");
      }
      if (const auto* tol = comp->attribute("tolerance"); tol && !(parse_number(*tol).value_or(-1) >= 0)) {
        add("assert", *comp, "tolerance '" + *tol + "' is not a non-negative number");
      }
      continue;
    }
    if (is_sem(*comp, "writer")) {
      if (!comp->has_attribute("path")) add("writer", *comp, "missing path");
      if (const auto* sel = comp->attribute("select")) {
        try {
          Selector::compile(*sel, namespaces_at(*comp));
        } catch (const Error& e) {
          add("selector", *comp, e.what());
        }
      } else {
        add("writer", *comp, "missing select");
      }
      continue;
    }
    if (!is_sem(*comp, "computation")) continue;

    std::string mode;
    try {
      mode = mode_of(*comp);
      if (mode == "optimize") read_config(*comp);
    } catch (const Error& e) {
      add(mode.empty() ? "mode" : "optimizer", *comp, e.what());
    }

    std::optional<mathml::Expr> form;
    try {
      form = read_form(doc, *comp);
    } catch (const Error& e) {
      add("form", *comp, e.what());
    }

    std::vector<const Element*> targets;
    try {
      targets = select_targets(*comp, *comp);
      if (comp->attribute("targets") != nullptr && targets.empty()) {
        add("targets", *comp, "targets=\"" + *comp->attribute("targets") + "\" matches nothing");
      }
      if (mode == "optimize" && comp->attribute("targets") == nullptr) add("targets", *comp, "optimize mode needs targets");
    } catch (const Error& e) {
      add("selector", *comp, e.what());
    }
    std::vector<domain::MoleculePtr> molecules;
    for (const Element* t : targets) {
      const auto it = doc.molecules.find(t);
      if (it == doc.molecules.end()) {
        add("undecorated", *comp, "target " + xml::path_of(*t) + " is not a decorated cml:molecule");
      } else {
        molecules.push_back(it->second);
      }
    }

    domain::ForcefieldPtr params;
    try {
      params = select_forcefield(doc, *comp);
    } catch (const Error& e) {
      add("forcefield", *comp, e.what());
    }

    const DictionaryEntry* entry = nullptr;
    try {
      entry = result_entry(*comp);
    } catch (const Error& e) {
      add("dictRef", *comp, e.what());
    }

    std::vector<Binding> bindings;
    try {
      bindings = read_bindings(*comp);
    } catch (const Error& e) {
      add("binding", *comp, e.what());
    }

    TypeEnv env;
    for (const auto& b : bindings) {
      switch (b.source) {
        case Binding::Source::set: {
          const std::string& kind = set_kinds().at(b.arg);
          env[b.name] = kind == "molecule" ? ValueType::object(kind) : ValueType::sequence(kind);
          if (comp->attribute("targets") == nullptr) add("binding", *b.element, "set '" + b.arg + "' needs a molecule target");
          break;
        }
        case Binding::Source::dict_ref: {
          const auto* e = dicts().find_term(b.arg);
          if (e == nullptr) {
            add("dictRef", *b.element, "'" + b.arg + "' is not in any dictionary");
            break;
          }
          env[b.name] = ValueType::scalar(e->dimension, e->unit);
          const bool constant = constant_refs().contains(b.arg) && params != nullptr;
          for (const auto& m : molecules) {
            if (constant) break;
            try {
              dict_ref_value(b.arg, m.get(), params.get());
            } catch (const Error& err) {
              add("dictRef", *b.element, err.what());
            }
          }
          if (!constant && comp->attribute("targets") == nullptr) {
            add("dictRef", *b.element, "no value for '" + b.arg + "' without a forcefield or target molecule");
          }
          break;
        }
        case Binding::Source::value: {
          if (!parse_number(b.arg)) add("binding", *b.element, "value '" + b.arg + "' is not a number");
          const auto* units = b.element->attribute("units");
          try {
            env[b.name] = units && !units->empty() ? domain::quantity_type(*units) : ValueType::dimensionless();
          } catch (const Error& e) {
            add("binding", *b.element, e.what());
          }
          break;
        }
        case Binding::Source::select:
          try {
            Selector::compile(b.arg, namespaces_at(*b.element));
          } catch (const Error& e) {
            add("selector", *b.element, e.what());
          }
          env[b.name] = ValueType::sequence();
          break;
      }
    }

    if (!form) continue;
    for (const auto& name : mathml::free_identifiers(*form)) {
      if (!env.contains(name)) add("unbound", *comp, "identifier '" + name + "' has no binding");
    }
    const Context functions = function_context(params);
    for (const auto& s : mathml::referenced_symbols(*form)) {
      if (functions.find_function(s) == nullptr) {
        add("function", *comp, "no registered function '" + (s.name.empty() ? s.definition_url : s.name) + "'");
      }
    }
    try {
      const ValueType result = infer_type(*form, env, functions);
      if (entry != nullptr && result.kind == ValueType::Kind::scalar && !(result.dimension == entry->dimension)) {
        add("dimension", *comp, "formula yields " + result.dimension.to_string() + " but resultDictRef '" +
                                    *comp->attribute("resultDictRef") + "' is " + entry->dimension.to_string());
      }
    } catch (const Error& e) {
      add("dimension", *comp, e.what());
    }
  }
  return report;
}

bool AssertReport::all_passed() const {
  return std::all_of(results.begin(), results.end(), [](const AssertResult& r) { return r.passed; });
}

AssertReport run_asserts(const ComputationalDocument& doc) {
  AssertReport report;
  for (const Element* a : descendants_or_self(*doc.root)) {
    if (!is_sem(*a, "assert")) continue;
    AssertResult r;
    r.location = where(*a);
    try {
      const auto* path = a->attribute("select");
      if (path == nullptr) fail(Errc::structural, "missing select");
      const Selector sel = Selector::compile(*path, namespaces_at(*a));
      if (const auto* expected_text = a->attribute("value")) {
        const auto expected = parse_number(*expected_text);
        if (!expected) fail(Errc::type_error, "expected value '" + *expected_text + "' is not a number");
        double tol = 1e-9;
        if (const auto* t = a->attribute("tolerance")) tol = parse_number(*t).value_or(tol);
        const auto got = sel.select_strings(*a);
        if (got.empty()) fail(Errc::computation, "'" + *path + "' matched nothing");
        r.passed = true;
        for (const auto& g : got) {
          const auto v = parse_number(g);
          const double bound = *expected == 0 ? tol : tol * std::abs(*expected);
          if (!v || !(std::abs(*v - *expected) <= bound)) {
            r.passed = false;
            r.message = "expected " + *expected_text + ", got " + g;
            break;
          }
        }
        if (r.passed) r.message = "value " + got.front();
      } else if (const auto* file = a->attribute("file")) {
        const fs::path golden_path = fs::path(*file).is_absolute() ? fs::path(*file) : document_dir(doc) / *file;
        const auto golden = xml::parse(read_file(golden_path), golden_path.string());
        const auto found = sel.select(*a);
        if (found.size() != 1) fail(Errc::computation, "'" + *path + "' matched " + std::to_string(found.size()) + " elements");
        r.passed = equivalent(*found.front(), *golden);
        r.message = r.passed ? "matches " + *file : xml::path_of(*found.front()) + " differs from " + *file;
      } else {
        fail(Errc::structural, "needs value or file");
      }
    } catch (const Error& e) {
      r.passed = false;
      r.message = e.what();
    }
    report.results.push_back(std::move(r));
  }
  return report;
}

WriteReport write_outputs(const ComputationalDocument& doc, const Sink& sink) {
  WriteReport report;
  for (const Element* w : descendants_or_self(*doc.root)) {
    if (!is_sem(*w, "writer")) continue;
    const auto* path = w->attribute("path");
    const auto* select = w->attribute("select");
    if (path == nullptr || select == nullptr) fail(Errc::structural, where(*w) + ": sem:writer needs select and path");
    const auto found = Selector::compile(*select, namespaces_at(*w)).select(*w);
    if (found.empty()) {
      report.warnings.push_back(where(*w) + ": '" + *select + "' matched nothing; " + *path + " not written");
      continue;
    }
    std::unique_ptr<Element> out;
    if (found.size() == 1) {
      out = xml::standalone_copy(*found.front());
    } else {
      out = std::make_unique<Element>("sem:selection");
      out->set_attribute("xmlns:sem", std::string(xml::kDeXMLNamespace));
      for (const Element* e : found) out->append(xml::standalone_copy(*e));
    }
    sink(*path, xml::serialize(*out));
    report.written.emplace_back(*path);
  }
  return report;
}

std::string serialize(const ComputationalDocument& doc) { return xml::serialize(*doc.root); }

// ---------------------------------------------------------------------------
// Provenance

namespace {

std::string signature(const Element& e) {
  std::string out = "{" + e.namespace_uri() + "}" + std::string(e.local_name());
  for (const auto& [key, value] : plain_attributes(e)) {
    if (key.first == xml::kDeXMLNamespace) continue;
    out += " {" + key.first + "}" + key.second + "=" + value;
  }
  return out + " |" + trimmed(e.text());
}

bool has_provenance_marker(const Element& e) {
  for (const Element* p = &e; p != nullptr; p = p->parent()) {
    for (const char* marker : {"source", "computation", "copyOf", "transformed"}) {
      if (sem_attribute(*p, marker) != nullptr) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<std::string> check_provenance(const Element& original, const Element& output) {
  std::set<std::string> known;
  for (const Element* e : descendants_or_self(original)) known.insert(signature(*e));
  std::vector<std::string> unaccounted;
  for (const Element* e : descendants_or_self(output)) {
    if (has_provenance_marker(*e)) continue;
    if (!known.contains(signature(*e))) unaccounted.push_back(xml::path_of(*e));
  }
  return unaccounted;
}

// ---------------------------------------------------------------------------
// Pipeline

RunResult run_pipeline(const fs::path& path, const RunOptions& options) {
  RunResult r;
  const auto step = [&](Stage stage, auto&& body) {
    r.reached = stage;
    try {
      body();
      return true;
    } catch (const Error& e) {
      r.error = e;
      return false;
    }
  };
  const auto go_on = [&](Stage stage) { return options.stop_after > stage; };

  if (!step(Stage::load, [&] { r.doc = load_document(path); }) || !go_on(Stage::load)) return r;
  if (!step(Stage::symbols, [&] { resolve_symbols(r.doc); }) || !go_on(Stage::symbols)) return r;
  if (!step(Stage::transclude, [&] {
        TranscludeOptions t;
        t.resolver = options.resolver ? options.resolver : default_resolver(document_dir(r.doc), options.allow_remote);
        t.max_depth = options.max_depth;
        transclude(r.doc, t);
      }) ||
      !go_on(Stage::transclude)) {
    return r;
  }
  if (!step(Stage::edit, [&] { apply_edits(r.doc); }) || !go_on(Stage::edit)) return r;
  if (!step(Stage::decorate, [&] { decorate(r.doc); }) || !go_on(Stage::decorate)) return r;
  step(Stage::check, [&] { r.integrity = check_integrity(r.doc); });
  if (!go_on(Stage::check) || (options.strict && !r.integrity.empty())) return r;
  if (!step(Stage::compute, [&] { run_computations(r.doc); }) || !go_on(Stage::compute)) return r;
  step(Stage::asserts, [&] { r.asserts = run_asserts(r.doc); });
  if (!go_on(Stage::asserts)) return r;
  step(Stage::write, [&] {
    r.writes = write_outputs(r.doc, options.sink ? options.sink : file_sink(document_dir(r.doc)));
  });
  return r;
}

}  // namespace compdoc::docpipe
