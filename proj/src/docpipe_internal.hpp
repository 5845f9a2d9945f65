#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "compdoc/docpipe.hpp"
#include "compdoc/xml.hpp"

namespace compdoc::docpipe::detail {

// fetch.cpp
std::string fetch_url(const std::string& url);
std::string sha256_hex(std::string_view data);
std::string utc_now();
bool is_remote(std::string_view href);

/// Document-order list of `root` and every element below it.
std::vector<xml::Element*> descendants_or_self(xml::Element& root);
std::vector<const xml::Element*> descendants_or_self(const xml::Element& root);

bool is_sem(const xml::Element& e, std::string_view local);
const std::string* sem_attribute(const xml::Element& e, std::string_view local);
/// Sets a DeXML attribute, declaring the namespace on `e` when it is not in scope.
void set_sem_attribute(xml::Element& e, std::string_view local, std::string value);

/// Appends a new element in `uri` under `parent`, reusing an in-scope prefix
/// or declaring `preferred`.
xml::Element& append_child(xml::Element& parent, std::string_view uri, std::string_view preferred,
                           std::string_view local);

/// Directory relative hrefs, asserted files and writer paths start from.
std::filesystem::path document_dir(const ComputationalDocument& doc);

/// `/a/b[2] (line 7)`.
std::string where(const xml::Element& e);

}  // namespace compdoc::docpipe::detail
