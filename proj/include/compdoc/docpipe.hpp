#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "compdoc/domain.hpp"
#include "compdoc/error.hpp"
#include "compdoc/evaluate.hpp"
#include "compdoc/optimize.hpp"
#include "compdoc/selector.hpp"
#include "compdoc/xml.hpp"

namespace compdoc::docpipe {

/// Result of fetching one href.
struct Fetched {
  std::string content;
  std::string location;   // canonical key used for cycle detection
  std::string recorded;   // what provenance records as the source
  std::string retrieved;  // UTC timestamp for remote sources, empty otherwise
};

/// Maps an href (no fragment) seen in a file at `base` to its content.
/// `base` is the including file's location as returned in Fetched::location.
using Resolver = std::function<Fetched(const std::string& href, const std::string& base)>;

/// Local files relative to the including file; http(s) only when `allow_remote`.
/// Local sources are recorded relative to `root_dir`.
Resolver default_resolver(std::filesystem::path root_dir, bool allow_remote);

/// Receives each writer's output.
using Sink = std::function<void(const std::filesystem::path& path, const std::string& content)>;
Sink file_sink(std::filesystem::path output_dir);

struct OptimizationRun {
  std::string computation;
  std::string target;
  opt::OptConfig config;
  opt::OptTrace trace;
};

struct ComputationalDocument {
  std::unique_ptr<xml::Element> root;
  std::filesystem::path path;    // empty for documents parsed from memory
  std::string location;          // base for relative hrefs
  std::map<std::string, std::string, std::less<>> symbols;
  std::map<const xml::Element*, domain::MoleculePtr> molecules;
  std::map<const xml::Element*, domain::ForcefieldPtr> forcefields;
  std::vector<OptimizationRun> optimizations;
};

ComputationalDocument load_document(const std::filesystem::path& path);
ComputationalDocument parse_document(std::string_view text, std::string location = ".");

/// Step 1. Collects every sem:variable (names are global and unique) and
/// replaces `${name}` in attribute values and text.
void resolve_symbols(ComputationalDocument& doc);

struct TranscludeOptions {
  Resolver resolver;  // default_resolver(document directory, false) when empty
  int max_depth = 16;
};

/// Step 2. Replaces every element carrying `href` with the referenced
/// element (`file`, `file#id` or `#id`), recursively, and records provenance
/// on each inserted root: sem:href, sem:source, sem:digest, optionally
/// sem:retrieved and sem:upstream.
void transclude(ComputationalDocument& doc, const TranscludeOptions& options = {});

/// Runs each sem:editor not yet applied, in document order.
void apply_edits(ComputationalDocument& doc);

/// Step 3. Promotes cml:molecule and cml:forcefield elements to domain objects.
void decorate(ComputationalDocument& doc);

struct Finding {
  std::string kind;
  std::string location;
  std::string message;
};

struct IntegrityReport {
  std::vector<Finding> findings;
  bool empty() const { return findings.empty(); }
};

/// Step 5. Static checks of computations, bindings, forms and asserts.
IntegrityReport check_integrity(const ComputationalDocument& doc);

/// Evaluates every sem:computation in document order and attaches results.
/// Stops at the first failing computation, which is marked failed; the error
/// is rethrown with its original code.
void run_computations(ComputationalDocument& doc);

struct AssertResult {
  std::string location;
  bool passed = false;
  std::string message;
};

struct AssertReport {
  std::vector<AssertResult> results;
  bool all_passed() const;
};

AssertReport run_asserts(const ComputationalDocument& doc);

struct WriteReport {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> warnings;
};

WriteReport write_outputs(const ComputationalDocument& doc, const Sink& sink);

/// Canonical serialization of the whole document.
std::string serialize(const ComputationalDocument& doc);

/// Every element of `output` must either occur in `original` (after symbol
/// resolution) or sit under an element carrying provenance: sem:source,
/// sem:computation, sem:copyOf or sem:transformed. Returns the paths of
/// elements that do neither.
std::vector<std::string> check_provenance(const xml::Element& original, const xml::Element& output);

/// Evaluation context for one target: registered functions, forcefield
/// functions when `forcefield` is set, and each sem:binding child of `scope`.
Context binding_context(const xml::Element& scope, const ComputationalDocument& doc, const xml::Element* target,
                        const domain::ForcefieldPtr& forcefield);

/// Namespace prefixes usable in a selector written on `element`: the
/// defaults plus every declaration in scope there.
NamespaceMap namespaces_at(const xml::Element& element);

enum class Stage { load, symbols, transclude, edit, decorate, check, compute, asserts, write };

struct RunOptions {
  bool allow_remote = false;
  bool strict = false;
  int max_depth = 16;
  Stage stop_after = Stage::write;
  Resolver resolver;           // overrides allow_remote when set
  Sink sink;                   // file_sink(document directory) when empty
};

struct RunResult {
  ComputationalDocument doc;
  IntegrityReport integrity;
  AssertReport asserts;
  WriteReport writes;
  std::optional<Error> error;
  Stage reached = Stage::load;
};

/// Runs the stages in order up to `stop_after`. Errors are captured in the
/// result together with the stage that raised them; the document keeps
/// whatever was completed. With `strict`, integrity findings stop the run
/// after the check.
RunResult run_pipeline(const std::filesystem::path& path, const RunOptions& options = {});

}  // namespace compdoc::docpipe
