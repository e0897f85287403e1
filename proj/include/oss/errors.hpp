#pragma once

#include <stdexcept>
#include <string>

namespace oss {

// Error categories map onto the CLI exit codes: parse_error -> 2,
// io_error -> 3, domain_error -> 4.
class error : public std::runtime_error {
public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

class parse_error : public error {
public:
  explicit parse_error(const std::string& what) : error(what) {}
};

class io_error : public error {
public:
  explicit io_error(const std::string& what) : error(what) {}
};

class domain_error : public error {
public:
  explicit domain_error(const std::string& what) : error(what) {}
};

}  // namespace oss
