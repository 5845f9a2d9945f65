#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace compdoc {

/// Error classes surfaced by every stage of the engine. Tests and the CLI
/// dispatch on the code, never on message text.
enum class Errc {
  xml_parse,
  io,
  unsupported_element,
  structural,
  unbound_identifier,
  unregistered_function,
  duplicate_registration,
  dimension_mismatch,
  numeric_domain,
  type_error,
  unknown_unit,
  selector_syntax,
  unbound_prefix,
  dangling_reference,
  duplicate_id,
  missing_coordinates,
  degenerate_geometry,
  unknown_element,
  unknown_atom,
  missing_parameter,
  invalid_parameter,
  undefined_variable,
  duplicate_variable,
  symbol_cycle,
  transclusion_cycle,
  transclusion_depth,
  unreachable_href,
  edit_target,
  decoration,
  computation,
  invalid_config,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace compdoc
