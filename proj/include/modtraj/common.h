#ifndef MODTRAJ_COMMON_H_
#define MODTRAJ_COMMON_H_

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace modtraj {

using UserId = std::string;

// Integer seconds since the dataset epoch.
using Timestamp = std::int64_t;
using Seconds = std::int64_t;

inline constexpr Seconds kSecondsPerDay = 86400;

// End time of an indefinite block. Every finite timestamp compares below it.
inline constexpr Timestamp kForever = std::numeric_limits<Timestamp>::max();

inline constexpr Timestamp saturating_add(Timestamp t, Seconds d) {
  return d >= kForever - t ? kForever : t + d;
}

inline constexpr double to_days(Seconds s) {
  return static_cast<double>(s) / static_cast<double>(kSecondsPerDay);
}

inline constexpr Seconds days_to_seconds(double days) {
  return static_cast<Seconds>(days * static_cast<double>(kSecondsPerDay));
}

enum class ErrorCode {
  kMalformedRecord,
  kUnknownAction,
  kNonPositiveDuration,
  kDuplicateId,
  kIndefiniteSpan,
  kNoAuthoredComments,
  kCutoffBeforeFirstActivity,
  kZeroExpectedCount,
  kDegenerateTable,
  kEmptySample,
  kEmptyCorpus,
  kDegenerateInput,
  kMissingFeature,
  kEmptyDataset,
  kGridEmpty,
  kTooFewRows,
  kInvalidConfig,
  kInvalidArgument,
  kIo,
};

const char* error_code_name(ErrorCode code);

// The single exception type thrown by the library. Callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const { return code_; }
  // The message without the code prefix.
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace modtraj

#endif  // MODTRAJ_COMMON_H_
