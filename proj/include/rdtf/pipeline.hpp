#pragma once

// Pipeline stages behind the command line tool. Every stage reads its inputs from and writes its
// artifacts to cfg.output.directory:
//   gen-data          initial.rdtl, initial.json
//   run-flow          trajectory.rdtl, flow.json           (needs initial.rdtl)
//   related-flow      related.rdtl, related.json           (needs trajectory.rdtl)
//   check-scalar      scalar.json, conjugate_mass.json, conjugate_bounds.json
//                     (needs initial.rdtl; uses trajectory.rdtl / related.rdtl when present)
//   verify-estimates  l2_rate.json, sobolev_sigma*.json, w12sigma.json, interpolation.json
//                     (needs initial.rdtl and trajectory.rdtl; flow.json for step-wise integrals)
//   report            summary.json over every report in the directory
// Reports also go to .csv when cfg.output.formats lists csv.

#include <string>
#include <vector>

#include "rdtf/config.hpp"
#include "rdtf/errors.hpp"
#include "rdtf/flow_engine.hpp"
#include "rdtf/norm_report.hpp"

namespace rdtf {

enum ExitCode : int { kExitOk = 0, kExitVerdict = 1, kExitInput = 2, kExitBlowUp = 3 };

/// A stage input is absent from the output directory.
class MissingInputError : public Error {
 public:
  using Error::Error;
};

struct StageResult {
  int exit_code = kExitOk;
  std::vector<std::string> artifacts;   // file names written, in order
  std::vector<NormReport> reports;
  std::string message;                  // diagnostic for non-zero exit codes
};

BackgroundMetric make_background(const ExperimentConfig& cfg);
MetricField make_initial_metric(const ExperimentConfig& cfg, const BackgroundMetric& bg);
/// Snapshot times of the flow stage, starting at 0 and ending at T_final.
std::vector<double> snapshot_times(const ExperimentConfig& cfg);

StageResult gen_data(const ExperimentConfig& cfg);
StageResult run_flow(const ExperimentConfig& cfg);
StageResult related_flow_stage(const ExperimentConfig& cfg);
StageResult check_scalar(const ExperimentConfig& cfg);
StageResult verify_estimates(const ExperimentConfig& cfg);
StageResult report_stage(const ExperimentConfig& cfg);
/// All stages in order; stops after run-flow on blow-up (exit 3) with the partial artifacts kept.
StageResult run_all(const ExperimentConfig& cfg);

/// Runs a stage and maps library errors to exit codes: configuration, precondition and file
/// errors to 2; SPD loss, orientation loss and CFL violations to 3. Anything else propagates.
StageResult run_stage(const std::string& name, const ExperimentConfig& cfg);

}  // namespace rdtf
