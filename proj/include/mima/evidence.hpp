#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mima/date.hpp"

namespace mima {

// One randomised comparison: log hazard ratio estimates on PFS and/or OS
// with known standard errors, and the dates each endpoint was reported.
struct TrialRecord {
  std::string study_id;
  std::string indication;
  std::optional<double> lhr_pfs;
  std::optional<double> se_pfs;
  std::optional<Date> pfs_report_date;
  std::optional<double> lhr_os;
  std::optional<double> se_os;
  std::optional<Date> os_report_date;

  bool has_pfs() const { return lhr_pfs.has_value(); }
  bool has_os() const { return lhr_os.has_value(); }
  bool has_both() const { return has_pfs() && has_os(); }

  bool operator==(const TrialRecord&) const = default;
};

// Immutable after construction; indication indices are contiguous and follow
// first appearance order in the input.
struct EvidenceSet {
  std::vector<TrialRecord> records;
  std::vector<std::string> indications;            // index -> label
  std::map<std::string, int> indication_index;     // label -> index

  int n_indications() const { return static_cast<int>(indications.size()); }
  int n_records() const { return static_cast<int>(records.size()); }
  int indication_of(int record) const { return indication_index.at(records[record].indication); }

  bool operator==(const EvidenceSet&) const = default;
};

struct IndicationCounts {
  std::string indication;
  int n_trials = 0;
  int n_pfs = 0;
  int n_os = 0;
};

struct EvidenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Builds the set from records, assigning indication indices by first
// appearance and checking per-record invariants. `row_offset` maps record i
// to input row i+row_offset in error messages (2 = first row after a header).
EvidenceSet make_evidence_set(std::vector<TrialRecord> records, int row_offset = 2);

// CSV dialect: exact header
//   study_id,indication,lhr_pfs,se_pfs,pfs_report_date,lhr_os,se_os,os_report_date
// empty string = absent, dates ISO-8601.
EvidenceSet parse_evidence(std::istream& in);
EvidenceSet parse_evidence_string(const std::string& text);
EvidenceSet parse_evidence_file(const std::string& path);

std::string emit_evidence(const EvidenceSet& e);
void write_evidence_file(const EvidenceSet& e, const std::string& path);

// Per-endpoint filter at a cutoff date: an estimate survives only if its
// report date is known and <= cutoff. Without a cutoff nothing is dropped
// (present-day analysis). Empty records and indications are removed and
// indices re-packed.
EvidenceSet snapshot(const EvidenceSet& e, const std::optional<Date>& cutoff);

std::vector<IndicationCounts> summarize(const EvidenceSet& e);

EvidenceSet exclude_indication(const EvidenceSet& e, const std::string& label);

}  // namespace mima
