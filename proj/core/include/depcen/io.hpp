#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "depcen/datagen.hpp"
#include "depcen/marginal.hpp"

namespace depcen {

/// Dataset parsed from `x,delta[,trt]` CSV.
struct Dataset {
  std::vector<SurvivalRecord> records;
  /// Empty unless the file carried a trt column.
  std::vector<int> trt;
};

/// Header `x,delta`; times printed with 17 significant digits.
void write_dataset_csv(std::ostream& out, std::span<const SurvivalRecord> records);
/// Header `x,delta,trt`.
void write_dataset_csv(std::ostream& out, std::span<const RctRecord> records);

/// Requires a header naming x and delta (trt optional, any column order).
/// Throws ParseError naming the offending line.
Dataset read_dataset_csv(std::istream& in);

/// Header `time,survival`.
void write_curve_csv(std::ostream& out, std::span<const CurvePoint> steps);

/// Writes `content` to `path` through a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace depcen
