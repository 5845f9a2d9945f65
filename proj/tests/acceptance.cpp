// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <openssl/evp.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "chem_support.hpp"
#include "compdoc/docpipe.hpp"
#include "interaction_oracle.hpp"

namespace fs = std::filesystem;
using namespace compdoc;
using testing_support::fixture;
using testing_support::molecule_fixture;
using testing_support::read_file;
using testing_support::read_fixture;
using testing_support::read_sample;
using testing_support::RigidMotion;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects reasons; a criterion passes when none were recorded.
struct Check {
  std::vector<std::string> problems;
  void expect(bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  }
};

int failures = 0;

void report(int n, const std::string& title, const std::function<void(Check&)>& body) {
  Check c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.problems.push_back(std::string("exception: ") + e.what());
  }
  std::cout << (c.problems.empty() ? "PASS" : "FAIL") << " " << n << " " << title;
  if (!c.problems.empty()) {
    ++failures;
    std::cout << ": " << c.problems.front();
    if (c.problems.size() > 1) std::cout << " (+" << c.problems.size() - 1 << " more)";
  }
  std::cout << std::endl;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

bool close_rel(double got, double want, double rel) {
  return got == want || std::abs(got - want) <= rel * std::abs(want);
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("compdoc-acceptance-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

std::string sha256(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void walk(const xml::Element& e, const std::function<void(const xml::Element&)>& f) {
  f(e);
  for (const auto* c : e.child_elements()) walk(*c, f);
}

const std::string* sem_attr(const xml::Element& e, std::string_view local) {
  return e.attribute_ns(xml::kDeXMLNamespace, local);
}

// ---------------------------------------------------------------------------

void micro_examples(Check& c) {
  const auto t0 = Clock::now();
  const Value four = eval(mathml::parse_mathml(read_fixture("mathml/addition.xml")), Context());
  const Context ctx = Context().bind("x", Value::number(2)).bind("c", Value::number(4));
  const Value eight = eval(mathml::parse_mathml(read_fixture("mathml/formula.xml")), ctx);
  const double t = seconds_since(t0);
  c.expect(four.as_scalar().value == 4.0, "addition gave " + num(four.as_scalar().value));
  c.expect(eight.as_scalar().value == 8.0, "formula gave " + num(eight.as_scalar().value));
  c.expect(t < 1.0, "took " + num(t) + " s");
}

void water_mass(Check& c) {
  const auto water = std::make_shared<const chem::Molecule>(molecule_fixture("water"));
  const Context ctx = domain::bind_molecule(domain::register_chem_functions(Context()), water);
  const double got = eval(mathml::parse_mathml(read_fixture("mathml/mass_sum.xml")), ctx).as_scalar().value;
  // Standard atomic weights: O 15.999, H 1.008.
  double want = 0;
  for (const auto& a : water->atoms) want += a.element == "O" ? 15.999 : a.element == "H" ? 1.008 : NAN;
  c.expect(std::abs(want - 18.015) < 1e-12, "hand sum is " + num(want));
  c.expect(std::abs(got - want) <= 1e-9, "got " + num(got) + ", want " + num(want));
}

// Builds a document that transcludes the molecule, the forcefield and the
// form files, runs it, and compares each attached property to total_energy.
void document_energies(Check& c) {
  const auto t0 = Clock::now();
  const fs::path dir = scratch_dir("energies");
  const ff::ForcefieldParams params = ff::parse_forcefield(read_fixture("forcefield/basic.xml"));
  const std::pair<const char*, const char*> parts[] = {{"bond", "bondEnergy"},       {"angle", "angleEnergy"},
                                                       {"dihedral", "dihedralEnergy"}, {"vdw", "vdwEnergy"},
                                                       {"elec", "elecEnergy"},       {"total", "totalEnergy"}};
  for (const char* name : {"diatomic", "chain4", "branched6"}) {
    const chem::Molecule m = molecule_fixture(name);
    std::ostringstream doc;
    doc << "<sem:computationalDocument xmlns:sem=\"urn:compdoc:dexml:1\" "
           "xmlns:cml=\"http://www.xml-cml.org/schema\">\n"
        << "  <sem:include href=\"" << fixture("forcefield/basic.xml").string() << "\"/>\n"
        << "  <sem:include href=\"" << fixture(std::string("molecules/") + name + ".cml").string() << "\"/>\n";
    for (const auto& [form, ref] : parts) {
      doc << "  <sem:functionalForm id=\"" << form << "\"><sem:include href=\""
          << testing_support::sample(std::string("forms/") + form + ".xml").string() << "\"/></sem:functionalForm>\n"
          << "  <sem:computation id=\"" << form << "\" form=\"" << form << "\" targets=\"//cml:molecule\" "
          << "resultDictRef=\"ff:" << ref << "\">\n"
          << "    <sem:binding name=\"bonds\" set=\"bonds\"/><sem:binding name=\"angles\" set=\"angles\"/>\n"
          << "    <sem:binding name=\"dihedrals\" set=\"dihedrals\"/><sem:binding name=\"pairs\" set=\"pairs\"/>\n"
          << "    <sem:binding name=\"ke\" dictRef=\"ff:ke\"/><sem:binding name=\"epsilon\" dictRef=\"ff:epsilon\"/>\n"
          << "  </sem:computation>\n";
    }
    doc << "</sem:computationalDocument>\n";
    const fs::path path = dir / (std::string(name) + ".xml");
    write_text(path, doc.str());

    docpipe::RunOptions opts;
    opts.stop_after = docpipe::Stage::compute;
    const auto run = docpipe::run_pipeline(path, opts);
    if (run.error) {
      c.expect(false, std::string(name) + ": " + run.error->what());
      continue;
    }
    c.expect(run.integrity.empty(), std::string(name) + ": integrity findings");

    const auto want = ff::total_energy(m, params);
    const std::map<std::string, double> expected = {
        {"ff:bondEnergy", want.bond}, {"ff:angleEnergy", want.angle}, {"ff:dihedralEnergy", want.dihedral},
        {"ff:vdwEnergy", want.vdw},   {"ff:elecEnergy", want.electrostatic}, {"ff:totalEnergy", want.total}};
    std::size_t seen = 0;
    walk(*run.doc.root, [&](const xml::Element& e) {
      if (!e.is(xml::kCMLNamespace, "property") || sem_attr(e, "computation") == nullptr) return;
      const auto it = expected.find(*e.attribute("dictRef"));
      if (it == expected.end()) return;
      ++seen;
      const double got = std::stod(e.child_elements().front()->text());
      c.expect(close_rel(got, it->second, 1e-9),
               std::string(name) + " " + it->first + ": " + num(got) + " vs " + num(it->second));
    });
    c.expect(seen == expected.size(), std::string(name) + ": " + std::to_string(seen) + " results attached");
  }
  const double t = seconds_since(t0);
  c.expect(t < 5.0, "took " + num(t) + " s");
}

void rigid_motions(Check& c) {
  const ff::ForcefieldParams params = ff::parse_forcefield(read_fixture("forcefield/basic.xml"));
  const std::string total_form = read_sample("forms/total.xml");
  const auto form = mathml::parse_mathml(total_form);
  const auto shared = std::make_shared<const ff::ForcefieldParams>(params);
  std::mt19937_64 rng(20261019);
  for (const char* name : {"diatomic", "chain4", "branched6", "ethane"}) {
    const chem::Molecule m = molecule_fixture(name);
    const double e0 = eval(form, domain::energy_context(std::make_shared<const chem::Molecule>(m), shared))
                          .as_scalar()
                          .value;
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
      const auto moved = std::make_shared<const chem::Molecule>(RigidMotion::random(rng).apply(m));
      const double e = eval(form, domain::energy_context(moved, shared)).as_scalar().value;
      worst = std::max(worst, std::abs(e - e0));
    }
    c.expect(worst < 1e-9, std::string(name) + ": largest change " + num(worst) + " kcal/mol");
  }
}

void optimization(Check& c) {
  ff::ForcefieldParams params;
  params.add_bond("CT", "CT", {100, 1.5});
  opt::OptConfig cfg;
  cfg.initial_step = 0.1;
  cfg.step_shrink = 0.5;
  cfg.min_step = 1e-5;
  for (double r : {2.0, 1.0}) {
    const auto t0 = Clock::now();
    chem::Molecule m;
    m.id = "d";
    chem::Atom a;
    a.id = "a1";
    a.element = "C";
    a.atom_type = "CT";
    chem::Atom b = a;
    b.id = "a2";
    b.position = {r, 0, 0};
    m.atoms = {a, b};
    m.bonds.push_back({{"a1", "a2"}, {}});
    const auto energy = [&](std::span<const double> x) { return ff::total_energy(m.with_coordinates(x), params).total; };
    const auto first = opt::optimize(energy, m.coordinates(), cfg);
    const auto second = opt::optimize(energy, m.coordinates(), cfg);
    const double t = seconds_since(t0);
    const std::string tag = "start " + num(r) + ": ";
    const auto& x = first.coords;
    const double length = std::hypot(x[3] - x[0], x[4] - x[1], x[5] - x[2]);
    c.expect(first.converged, tag + "not converged (" + first.reason + ")");
    c.expect(std::abs(length - 1.5) <= 1e-4, tag + "bond length " + num(length));
    c.expect(std::abs(first.energy) <= 1e-6, tag + "energy " + num(first.energy));
    for (std::size_t i = 1; i < first.records.size(); ++i) {
      if (first.records[i].best_energy > first.records[i - 1].best_energy) {
        c.expect(false, tag + "trace rises at record " + std::to_string(i));
        break;
      }
    }
    c.expect(first.coords == second.coords && first.energy == second.energy &&
                 opt::format_trace(first, cfg) == opt::format_trace(second, cfg),
             tag + "runs differ");
    c.expect(t < 1.0, tag + "took " + num(t) + " s");
  }
}

void interaction_sets(Check& c) {
  int checked = 0;
  for (const auto& entry : fs::directory_iterator(fixture("molecules"))) {
    const chem::Molecule m = chem::parse_cml(read_file(entry.path()));
    if (m.atoms.size() > 8) continue;
    ++checked;
    c.expect(testing_support::as_ids(m, chem::interaction_sets(m)) == testing_support::brute_force(m),
             entry.path().filename().string() + " differs from brute force");
  }
  c.expect(checked >= 8, "only " + std::to_string(checked) + " molecules checked");
}

struct CaseStudyRun {
  std::string document;
  std::map<std::string, std::string> written;
  bool ok = false;
};

CaseStudyRun run_case_study() {
  CaseStudyRun out;
  docpipe::RunOptions opts;
  opts.sink = [&](const fs::path& p, const std::string& content) { out.written[p.generic_string()] = content; };
  auto run = docpipe::run_pipeline(testing_support::sample("case-study/case-study.xml"), opts);
  out.ok = !run.error && run.integrity.empty() && run.asserts.all_passed();
  if (run.doc.root) out.document = docpipe::serialize(run.doc);
  return out;
}

void reproducibility(Check& c) {
  const auto a = run_case_study();
  const auto b = run_case_study();
  c.expect(a.ok && b.ok, "case study did not run cleanly");
  c.expect(!a.document.empty() && a.document == b.document, "documents differ between runs");
  c.expect(!a.written.empty() && a.written == b.written, "writer outputs differ between runs");

  // Reload the output and look for a provenance record for each href of the
  // symbol-resolved original.
  const fs::path dir = scratch_dir("case-study");
  write_text(dir / "out.xml", a.document);
  const auto reloaded = docpipe::load_document(dir / "out.xml");
  auto original = docpipe::load_document(testing_support::sample("case-study/case-study.xml"));
  docpipe::resolve_symbols(original);
  const fs::path base = testing_support::sample("case-study");

  std::vector<std::string> hrefs;
  walk(*original.root, [&](const xml::Element& e) {
    if (const auto* h = e.attribute("href")) hrefs.push_back(*h);
  });
  c.expect(hrefs.size() >= 10, std::to_string(hrefs.size()) + " hrefs in the original");
  for (const auto& href : hrefs) {
    const std::string file = href.substr(0, href.find('#'));
    const std::string digest = "sha256:" + sha256(read_file(base / file));
    int found = 0;
    walk(*reloaded.root, [&](const xml::Element& e) {
      const auto* h = sem_attr(e, "href");
      const auto* s = sem_attr(e, "source");
      const auto* d = sem_attr(e, "digest");
      if (h && *h == href && s && d && *d == digest && !sem_attr(e, "derivedFrom") &&
          fs::weakly_canonical(base / *s) == fs::weakly_canonical(base / file)) {
        ++found;
      }
    });
    c.expect(found == 1, href + ": " + std::to_string(found) + " provenance records");
  }
  const auto missing = docpipe::check_provenance(*original.root, *reloaded.root);
  c.expect(missing.empty(), missing.empty() ? "" : "no provenance for " + missing.front());
}

void search_by_form(Check& c) {
  const auto sel = compile_selector("//m:apply[m:sin]", default_namespaces());
  int hits = 0;
  for (int i = 1; i <= 10; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "corpus/doc%02d.xml", i);
    const auto parsed = xml::parse(read_fixture(name));
    const xml::Element& root = *parsed;
    std::vector<const xml::Element*> naive;
    walk(root, [&](const xml::Element& e) {
      if (!e.is(xml::kMathMLNamespace, "apply")) return;
      for (const auto* k : e.child_elements()) {
        if (k->is(xml::kMathMLNamespace, "sin")) {
          naive.push_back(&e);
          break;
        }
      }
    });
    const auto got = sel.select(root);
    hits += static_cast<int>(got.size());
    c.expect(got == naive, std::string(name) + ": " + std::to_string(got.size()) + " selected, " +
                               std::to_string(naive.size()) + " by scan");
  }
  c.expect(hits > 0, "no matches in the corpus");
}

void failure_semantics(Check& c) {
  const std::pair<const char*, Errc> cases[] = {{"missing-parameter", Errc::missing_parameter},
                                                {"unbound-identifier", Errc::unbound_identifier},
                                                {"dimension-mismatch", Errc::dimension_mismatch},
                                                {"transclusion-cycle", Errc::transclusion_cycle},
                                                {"symbol-cycle", Errc::symbol_cycle}};
  const fs::path dir = scratch_dir("negative");
  for (const auto& [name, errc] : cases) {
    const fs::path doc = fixture(std::string("negative/") + name + ".xml");
    const auto run = docpipe::run_pipeline(doc);
    c.expect(run.error && run.error->code() == errc,
             std::string(name) + ": pipeline gave " +
                 (run.error ? std::string(to_string(run.error->code())) : std::string("no error")));

    const fs::path err = dir / (std::string(name) + ".err");
    const std::string cmd = std::string("\"") + COMPDOC_CLI + "\" run \"" + doc.string() + "\" >/dev/null 2>\"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    c.expect(code != 0, std::string(name) + ": cli exit " + std::to_string(code));
    const std::string tag = "[" + std::string(to_string(errc)) + "]";
    c.expect(read_file(err).find(tag) != std::string::npos, std::string(name) + ": stderr lacks " + tag);
  }
}

}  // namespace

int main() {
  report(1, "micro-examples exact", micro_examples);
  report(2, "water mass sum", water_mass);
  report(3, "document energies match forcefield oracle", document_energies);
  report(4, "rigid-motion invariance", rigid_motions);
  report(5, "harmonic diatomic optimization", optimization);
  report(6, "interaction sets match brute force", interaction_sets);
  report(7, "case study reproducible with provenance", reproducibility);
  report(8, "search by form matches naive scan", search_by_form);
  report(9, "failure semantics", failure_semantics);
  fs::remove_all(fs::temp_directory_path() / ("compdoc-acceptance-" + std::to_string(::getpid())));
  return failures == 0 ? 0 : 1;
}
