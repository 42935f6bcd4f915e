#ifndef HHME_INGEST_HPP
#define HHME_INGEST_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hhme/model.hpp"

namespace hhme::ingest {

/// Paired true/measured observations with a fixed response label per row.
struct PairedDataset {
  std::vector<double> y_true, x_true, y_meas, x_meas;
  std::vector<std::uint8_t> stratum;  // 1 or 2

  std::int64_t size() const { return static_cast<std::int64_t>(y_true.size()); }
};

/// Reads a CSV with the exact header columns y_true, x_true, y_meas, x_meas,
/// stratum (any order). Errors name the missing column or the offending
/// row/column.
PairedDataset load_dataset(const std::string& path);
PairedDataset parse_dataset(const std::string& text);

/// Everything estimate_parameters derives besides the ParameterSet itself:
/// the direct (true-column) variances next to the indirect route
/// s^2(measured) - error variance, for cross-validation.
struct IngestResult {
  ParameterSet params;
  double S_y_sq_direct = 0.0;
  double S_y_sq_indirect = 0.0;
  double S_x_sq_direct = 0.0;
  double S_x_sq_indirect = 0.0;
};

/// Turns a dataset into a ParameterSet: means/SDs/correlation from the true
/// columns (divisor n-1), error variances as per-stratum sample variances of
/// (measured - true), W2 as the stratum-2 fraction unless overridden. k is
/// user-supplied; the data cannot reveal it.
/// Throws when the indirect variance route comes out nonpositive ("error
/// variance exceeds observed variance").
IngestResult estimate_parameters(const PairedDataset& data, double k,
                                 std::optional<double> W2_override = {});

}  // namespace hhme::ingest

#endif  // HHME_INGEST_HPP
