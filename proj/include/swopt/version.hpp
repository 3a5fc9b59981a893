#pragma once

namespace swopt {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kReportSchema = "swopt.run-report/1";

}  // namespace swopt
