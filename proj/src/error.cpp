#include "compdoc/error.hpp"

namespace compdoc {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::xml_parse: return "xml-parse";
    case Errc::io: return "io";
    case Errc::unsupported_element: return "unsupported-element";
    case Errc::structural: return "structural";
    case Errc::unbound_identifier: return "unbound-identifier";
    case Errc::unregistered_function: return "unregistered-function";
    case Errc::duplicate_registration: return "duplicate-registration";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::numeric_domain: return "numeric-domain";
    case Errc::type_error: return "type-error";
    case Errc::unknown_unit: return "unknown-unit";
    case Errc::selector_syntax: return "selector-syntax";
    case Errc::unbound_prefix: return "unbound-prefix";
    case Errc::dangling_reference: return "dangling-reference";
    case Errc::duplicate_id: return "duplicate-id";
    case Errc::missing_coordinates: return "missing-coordinates";
    case Errc::degenerate_geometry: return "degenerate-geometry";
    case Errc::unknown_element: return "unknown-element";
    case Errc::unknown_atom: return "unknown-atom";
    case Errc::missing_parameter: return "missing-parameter";
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::undefined_variable: return "undefined-variable";
    case Errc::duplicate_variable: return "duplicate-variable";
    case Errc::symbol_cycle: return "symbol-cycle";
    case Errc::transclusion_cycle: return "transclusion-cycle";
    case Errc::transclusion_depth: return "transclusion-depth";
    case Errc::unreachable_href: return "unreachable-href";
    case Errc::edit_target: return "edit-target";
    case Errc::decoration: return "decoration";
    case Errc::computation: return "computation";
    case Errc::invalid_config: return "invalid-config";
  }
  return "unknown";
}

}  // namespace compdoc
