#pragma once

// Synthetic incident fixtures for the four reference cases.

#include <map>
#include <string>

namespace pvota::fixture {

/// File name -> contents. Same case and seed give byte-identical output.
using FileSet = std::map<std::string, std::string>;

/// `program` is the path written into config.json, relative to the case directory.
FileSet generate(int case_id, std::uint64_t seed = 20240601, const std::string& program = "../soap_server.der");

/// Writes every file under `dir`, creating it if needed.
void write(const FileSet& files, const std::string& dir);

} // namespace pvota::fixture
