// Synthetic experiment harness: config parsing, trial execution and CSV
// output. Results are deterministic for a fixed spec and seed, whatever the
// number of worker threads.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "srp/recovery.h"

namespace srp {

enum class Method {
  kProcrustes,
  kIrls,
  kIrlsSrp2Init,
  kSrp1,
  kSrp2,
  kSrpInf,
  kNonSym,
  kSrpSquared,
  kLowerBound2,
  kLowerBoundInf,
  kGroundTruth,
};

Method ParseMethod(std::string_view tag);  // throws std::invalid_argument
std::string ToString(Method m);

enum class ExperimentKind {
  kApproximationRatio,
  kRecoveryNoiseless,
  kRecoveryNoisy,
  kSemisupervised,
};

ExperimentKind ParseExperimentKind(std::string_view text);
std::string ToString(ExperimentKind k);

struct ExperimentSpec {
  std::string experiment_id = "experiment";
  ExperimentKind kind = ExperimentKind::kApproximationRatio;
  std::vector<int> dims;
  std::vector<int> outlier_counts;
  int trials = 50;
  std::vector<Method> methods;  // sorted, no duplicates
  NoiseParams noise;            // d, n_outliers and seed are set per trial
  double lambda_bar = 0.2;
  std::uint64_t seed = 0;
  std::string output_path;
  std::string summary_path;  // empty: output_path with ".summary.csv"
  // false runs the orthogonal problem (t = 0 everywhere); forced false for
  // semisupervised runs.
  bool translations = true;
  int n_tilde = 100;          // semisupervised pool size
  double success_tol = 1e-5;  // rot_err threshold for the summary success rate
  bool timing = false;        // write wall_time_s; off keeps output byte-stable

  void Validate() const;  // throws std::invalid_argument
};

// Flat key=value lines, '#' comments, comma-separated lists. Keys are the
// ExperimentSpec field names, with noise.sigma, noise.sigma_t and
// noise.n_inliers for the noise template. Unknown or repeated keys throw.
ExperimentSpec ParseExperimentSpec(std::istream& in);
ExperimentSpec LoadExperimentSpec(const std::string& path);

struct TrialRecord {
  std::string experiment_id;
  int trial = 0;
  int d = 0;
  int n_outliers = 0;
  Method method = Method::kProcrustes;
  // NaN marks a field that does not apply; written as an empty cell.
  double achieved_energy = 0.0;
  double lower_bound = 0.0;
  double ratio = 0.0;
  double rot_err = 0.0;
  double trans_err = 0.0;
  double wall_time_s = 0.0;
  bool converged = true;
};

struct SummaryRow {
  int d = 0;
  int n_outliers = 0;
  Method method = Method::kProcrustes;
  int rows = 0;
  // Mean and standard error over the rows where the field is present.
  double mean_achieved_energy = 0.0, se_achieved_energy = 0.0;
  double mean_lower_bound = 0.0, se_lower_bound = 0.0;
  double mean_ratio = 0.0, se_ratio = 0.0, max_ratio = 0.0;
  double mean_rot_err = 0.0, se_rot_err = 0.0;
  double mean_trans_err = 0.0, se_trans_err = 0.0;
  double success_rate = 0.0;    // fraction of rows with rot_err <= success_tol
  double converged_rate = 0.0;
};

struct ExperimentResult {
  std::vector<TrialRecord> records;  // ordered by (d, n_outliers, trial, method)
  std::vector<SummaryRow> summary;   // ordered by (d, n_outliers, method)
};

// Seed of one trial, derived from the spec seed and the cell coordinates.
std::uint64_t TrialSeed(std::uint64_t seed, int d, int n_outliers, int trial);

// The instance of one non-semisupervised trial.
SyntheticInstance TrialInstance(const ExperimentSpec& spec, int d, int n_outliers, int trial);

// Runs every method on one generated instance.
std::vector<TrialRecord> RunTrial(const ExperimentSpec& spec, int d, int n_outliers, int trial);

// SRP_THREADS (0 or unset: hardware concurrency) sets the worker count when
// `threads` is 0.
ExperimentResult RunExperiment(const ExperimentSpec& spec, int threads = 0);

std::vector<SummaryRow> Summarize(const ExperimentSpec& spec,
                                  const std::vector<TrialRecord>& records);

void WriteRecordsCsv(std::ostream& out, const std::vector<TrialRecord>& records, bool timing);
void WriteSummaryCsv(std::ostream& out, const std::string& experiment_id,
                     const std::vector<SummaryRow>& summary);

// Checks the output paths are writable, runs the experiment and writes both
// CSV files. Throws DataError on I/O failure before any solve.
ExperimentResult RunAndWrite(const ExperimentSpec& spec);

std::string SummaryPath(const ExperimentSpec& spec);

}  // namespace srp
