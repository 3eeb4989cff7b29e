#pragma once

#include <stdexcept>
#include <string>

namespace dyadlens {

enum class Err {
    ok = 0,
    io,
    parse,
    schema,
    missing_meta,
    empty_stream,
    window_too_long,
    too_few_samples,
    length_mismatch,
    empty,
    alignment,
    too_short,
    degenerate_series,
    insufficient_history,
    bad_table,
    no_match,
    out_of_order,
    short_calibration,
    zero_variance,
    too_few_groups,
    too_few_values,
    domain,
    bad_arg,
    usage,
    internal,
};

const char* err_name(Err e);

class DlError : public std::runtime_error {
  public:
    DlError(Err code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}

    Err code() const { return code_; }

  private:
    Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) {
    throw DlError(code, msg);
}

}  // namespace dyadlens
