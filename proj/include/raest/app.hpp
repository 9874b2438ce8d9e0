#pragma once

#include "raest/estimate.hpp"
#include "raest/inference.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace raest {

/// Bid design b_1 < ... < b_G of a referendum survey; b_0 = 0.
struct WtpSpec {
  std::vector<double> bids;
};

/// Throws BidOrderViolation unless the bids are positive and strictly
/// increasing.
void validate_bids(const std::vector<double>& bids);

/// Linear contrast with weights b_g - b_{g-1}.
Contrast wtp_contrast(const WtpSpec& spec);

/// Lower bound on mean willingness to pay, sum_g (b_g - b_{g-1}) mu_g. With
/// subsample means this is the ABERS estimator.
ContrastResult wtp_lower_bound(const EstimatorResult& result, const WtpSpec& spec);

/// Subcommand entry points. `args` excludes the program and subcommand
/// names. Return the process exit status.
int cmd_estimate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_simulate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_wtp(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Dispatches on the first argument (estimate, simulate, wtp).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace raest
