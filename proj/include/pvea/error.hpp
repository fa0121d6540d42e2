#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pvea {

enum class Errc {
  out_of_bounds,
  value_too_wide,
  syntax_error,
  unsupported_stream,
  unencodable_value,
  width_mismatch,
  mode_mismatch,
  already_provisioned,
  missing_uid,
  schedule_out_of_range,
  not_intra_picture,
  dimension_mismatch,
  io_failure,
  degenerate_input,
  inconsistent_pairs,
  invalid_argument,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Raised by the bitstream parser; carries the absolute bit offset where the
// offending element starts.
class SyntaxError : public Error {
 public:
  SyntaxError(std::uint64_t bit_offset, const std::string& expected)
      : Error(Errc::syntax_error,
              "at bit " + std::to_string(bit_offset) + ", expected " + expected),
        bit_offset_(bit_offset),
        expected_(expected) {}

  std::uint64_t bit_offset() const noexcept { return bit_offset_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::uint64_t bit_offset_;
  std::string expected_;
};

}  // namespace pvea
