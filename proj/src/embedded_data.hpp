#pragma once

#include <string_view>

// Contents of data/ compiled into the library (see src/embedded_data.cpp.in).
namespace compdoc::embedded {

std::string_view units_dictionary();
std::string_view ff_dictionary();
std::string_view element_table();

}  // namespace compdoc::embedded
