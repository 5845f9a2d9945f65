// compdoc: runs computational documents.
//
//   compdoc run DOC [--strict] [--allow-remote] [--out FILE] [--trace FILE]
//   compdoc validate DOC [--allow-remote]
//   compdoc eval FORM.xml BINDINGS.json
//
// Exit status: 0 success, 1 pipeline error, 2 assert failure, 3 integrity findings.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "compdoc/docpipe.hpp"

namespace fs = std::filesystem;
using namespace compdoc;

namespace {

enum Exit { ok = 0, pipeline_error = 1, assert_failure = 2, integrity_findings = 3 };

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) fail(Errc::io, "cannot write " + path.string());
}

void report_error(const Error& e) {
  std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
}

void print_integrity(const docpipe::IntegrityReport& r) {
  std::cout << "integrity: " << r.findings.size() << (r.findings.size() == 1 ? " finding" : " findings") << "\n";
  for (const auto& f : r.findings) std::cout << "  [" << f.kind << "] " << f.location << ": " << f.message << "\n";
}

void print_asserts(const docpipe::AssertReport& r) {
  std::size_t passed = 0;
  for (const auto& a : r.results) passed += a.passed ? 1 : 0;
  std::cout << "asserts: " << passed << " passed, " << r.results.size() - passed << " failed\n";
  for (const auto& a : r.results) {
    std::cout << "  " << (a.passed ? "PASS " : "FAIL ") << a.location << ": " << a.message << "\n";
  }
}

std::string format_value(const Value& v) {
  if (v.is_scalar()) {
    const auto& s = v.as_scalar();
    return mathml::format_number(s.value) + (s.unit.empty() ? "" : " " + s.unit.to_string());
  }
  if (v.is_bool()) return v.as_bool() ? "true" : "false";
  return v.describe();
}

struct RunArgs {
  std::string document;
  bool strict = false;
  bool allow_remote = false;
  std::string out;
  std::string trace;
};

int run_document(const RunArgs& args, docpipe::Stage stop_after) {
  docpipe::RunOptions opts;
  opts.allow_remote = args.allow_remote;
  opts.strict = args.strict;
  opts.stop_after = stop_after;
  if (!args.out.empty()) {
    const fs::path dir = fs::absolute(args.out).parent_path();
    opts.sink = [dir](const fs::path& p, const std::string& content) {
      write_file(p.is_absolute() ? p : dir / p, content);
      std::cout << "wrote " << (p.is_absolute() ? p : dir / p).string() << "\n";
    };
  }
  auto result = docpipe::run_pipeline(args.document, opts);

  if (result.reached >= docpipe::Stage::check) print_integrity(result.integrity);
  if (result.reached >= docpipe::Stage::asserts && !result.error) print_asserts(result.asserts);
  for (const auto& w : result.writes.warnings) std::cerr << "warning: " << w << "\n";

  if (result.doc.root) {
    try {
      if (!args.out.empty()) write_file(args.out, docpipe::serialize(result.doc));
      if (!args.trace.empty()) {
        std::string text;
        for (const auto& run : result.doc.optimizations) {
          text += "# computation " + run.computation + " target " + run.target + "\n";
          text += opt::format_trace(run.trace, run.config);
        }
        write_file(args.trace, text);
      }
    } catch (const Error& e) {
      report_error(e);
      return pipeline_error;
    }
  }

  if (result.error) {
    report_error(*result.error);
    return pipeline_error;
  }
  if (!result.asserts.all_passed()) return assert_failure;
  if (!result.integrity.empty()) return integrity_findings;
  return ok;
}

Value json_binding(const std::string& name, const nlohmann::json& j) {
  if (j.is_number()) return Value::number(j.get<double>());
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_object() && j.contains("value") && j["value"].is_number()) {
    const double v = j["value"].get<double>();
    if (j.contains("units")) return Value::scalar(domain::quantity(v, j["units"].get<std::string>()));
    return Value::number(v);
  }
  if (j.is_array()) {
    std::vector<Value> items;
    for (const auto& item : j) items.push_back(json_binding(name, item));
    return Value::sequence(std::move(items));
  }
  fail(Errc::type_error, "binding '" + name + "': expected a number, {\"value\", \"units\"} or an array");
}

int eval_form(const std::string& form_path, const std::string& bindings_path) {
  try {
    const mathml::Expr form = mathml::parse_mathml(read_file(form_path));
    nlohmann::json bindings;
    try {
      bindings = nlohmann::json::parse(read_file(bindings_path));
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::structural, bindings_path + ": " + e.what());
    }
    if (!bindings.is_object()) fail(Errc::structural, bindings_path + ": expected a JSON object");
    const fs::path base = fs::path(bindings_path).parent_path();

    domain::MoleculePtr molecule;
    domain::ForcefieldPtr forcefield;
    if (bindings.contains("molecule")) {
      molecule = std::make_shared<const chem::Molecule>(
          chem::parse_cml(read_file(base / bindings["molecule"].get<std::string>())));
    }
    if (bindings.contains("forcefield")) {
      forcefield = std::make_shared<const ff::ForcefieldParams>(
          ff::parse_forcefield(read_file(base / bindings["forcefield"].get<std::string>())));
    }
    Context ctx;
    if (molecule && forcefield) {
      ctx = domain::energy_context(molecule, forcefield);
    } else {
      ctx = domain::register_chem_functions(ctx);
      if (forcefield) ctx = domain::register_forcefield_functions(ctx, forcefield);
      if (molecule) ctx = domain::bind_molecule(ctx, molecule);
    }
    for (const auto& [name, value] : bindings.items()) {
      if (name == "molecule" || name == "forcefield") continue;
      ctx = ctx.bind(name, json_binding(name, value));
    }
    std::cout << format_value(eval(form, ctx)) << "\n";
    return ok;
  } catch (const Error& e) {
    report_error(e);
    return pipeline_error;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error [structural]: " << bindings_path << ": " << e.what() << "\n";
    return pipeline_error;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Runs computational documents"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Prepare, check, compute, assert and write a document");
  run->add_option("document", run_args.document, "Document to run")->required();
  run->add_flag("--strict", run_args.strict, "Stop before computing when the integrity check finds problems");
  run->add_flag("--allow-remote", run_args.allow_remote, "Allow http(s) hrefs");
  run->add_option("--out", run_args.out, "Write the final document here; writer paths become relative to its directory");
  run->add_option("--trace", run_args.trace, "Write optimizer traces here");

  RunArgs validate_args;
  auto* validate = app.add_subcommand("validate", "Prepare and check a document without computing");
  validate->add_option("document", validate_args.document, "Document to check")->required();
  validate->add_flag("--allow-remote", validate_args.allow_remote, "Allow http(s) hrefs");

  std::string form, bindings;
  auto* evaluate = app.add_subcommand("eval", "Evaluate one MathML file against a JSON bindings file");
  evaluate->add_option("form", form, "MathML file")->required();
  evaluate->add_option("bindings", bindings, "JSON object of bindings")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : pipeline_error;
  }

  if (*run) return run_document(run_args, docpipe::Stage::write);
  if (*validate) return run_document(validate_args, docpipe::Stage::check);
  return eval_form(form, bindings);
}
