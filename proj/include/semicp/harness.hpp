#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "semicp/chain.hpp"
#include "semicp/coupling.hpp"
#include "semicp/meanfield.hpp"

namespace semicp {

enum class ExperimentKind { Sweep, MeanField, CouplingAudit, Lumping, Aux, Ode };
enum class OutputFormat { Csv, Json };

const char* to_string(ExperimentKind k);
ExperimentKind parse_kind(const std::string& s);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Sweep;
  std::vector<int> n_list;
  std::vector<double> lambda_list;
  std::optional<double> theta;
  std::size_t replicas = 1000;
  double horizon = 1000;
  std::uint64_t master_seed = 1;
  std::string out_path;
  OutputFormat format = OutputFormat::Csv;
  double epsilon = 0.05;  ///< mean-field deviation threshold
  unsigned threads = 0;   ///< 0: hardware concurrency

  /// Throws UsageError on empty lists, n < 1, lambda <= 0, replicas < 1 or
  /// horizon <= 0.
  void validate() const;
};

/// Per-kind defaults for replicas and horizon.
ExperimentConfig default_config(ExperimentKind kind);

/// Calls fn(i) for i in [0, count) on up to `threads` workers. Results must be
/// written by index, which keeps aggregation independent of scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Stream index of replica `r` in experiment cell `cell`.
constexpr std::uint64_t replica_index(std::uint64_t cell, std::uint64_t r) { return (cell << 32) | r; }

struct SweepRow {
  int n;
  double lambda;
  std::size_t replicas;
  std::size_t extinct_count;
  std::size_t survived_count;
  double tau_median;  ///< NaN when extinct_count == 0
  double tau_mean;
  double tau_p95;
  double horizon;
};

struct MeanFieldRow {
  int n;
  double lambda;
  double T;
  std::size_t replicas;
  double epsilon;
  std::size_t exceed_count;
  double sup_dev_median;
};

struct AuditRow {
  std::string variant;
  int n;
  double lambda;
  std::size_t replicas;
  std::size_t violation_replicas;
  std::optional<OrderViolation> first_violation_example;
};

struct LumpingRow {
  int n;
  double lambda;
  double T;
  std::size_t replicas;
  double tv_distance;
};

struct AuxRow {
  std::string check;
  double lambda;
  int n;
  double theta;  ///< NaN for checks that do not use it
  std::size_t replicas;
  double observed;
  double threshold;
  bool passed;
  std::string detail;
};

struct OdeRow {
  double lambda;
  double t;
  double b;
  double g;
};

/// Order statistics over a sample (linear interpolation between order
/// statistics); NaN for an empty sample.
double quantile(std::vector<double> values, double q);
/// Pairwise summation of the sorted sample divided by its size.
double stable_mean(std::vector<double> values);

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg);

/// Supremum over event times in [0, T] (pre- and post-jump) and T itself of
/// the l1 distance between (B/n, G/n) and the ODE solution from (1, 0).
double meanfield_sup_deviation(const ModelParams& p, const OdePath& ode, double T, RngStream& rng);
std::vector<MeanFieldRow> run_meanfield(const ExperimentConfig& cfg);

/// Audit rows for both variants. Initial pairs come from random_ordered_pair.
std::vector<AuditRow> run_coupling_audit(const ExperimentConfig& cfg);

/// Total-variation distance between the laws of the stopped Counts at time T
/// under simulate_full and simulate, `replicas` runs each, started at (n, 0).
double lumping_tv(const ModelParams& p, const Counts& init, double T, std::size_t replicas,
                  std::uint64_t master_seed, std::uint64_t cell = 0, unsigned threads = 0);
std::vector<LumpingRow> run_lumping_check(const ExperimentConfig& cfg);

/// Survival-construction checks per lambda and n; subcritical-envelope checks
/// per n when theta is set. A lambda without a feasible design yields a
/// failing "design" row.
std::vector<AuxRow> run_aux_checks(const ExperimentConfig& cfg);

std::vector<OdeRow> run_ode(const ExperimentConfig& cfg);

// Serialization: CSV with a header of field names (RFC-4180 quoting, 17
// significant digits, empty cells for missing values) or a JSON array of
// objects with the same keys.
template <class Row>
std::string format_rows(const std::vector<Row>& rows, OutputFormat fmt);
template <class Row>
std::vector<Row> parse_rows(const std::string& text, OutputFormat fmt);

/// Writes text to path; throws IoError.
void write_text(const std::string& path, const std::string& text);

}  // namespace semicp
