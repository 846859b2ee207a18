#include "mima/evidence.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace mima {

namespace {

const char* kHeader =
    "study_id,indication,lhr_pfs,se_pfs,pfs_report_date,lhr_os,se_os,os_report_date";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> parse_opt_double(const std::string& s, const std::string& what, int row) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw EvidenceError("malformed number in " + what + ", row " + std::to_string(row));
  }
}

std::optional<Date> parse_opt_date(const std::string& s, const std::string& what, int row) {
  if (s.empty()) return std::nullopt;
  try {
    return Date::parse(s);
  } catch (const std::exception&) {
    throw EvidenceError("malformed date in " + what + ", row " + std::to_string(row));
  }
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", *v);
  return buf;
}

}  // namespace

EvidenceSet make_evidence_set(std::vector<TrialRecord> records, int row_offset) {
  EvidenceSet e;
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TrialRecord& r = records[i];
    const int row = static_cast<int>(i) + row_offset;
    if (r.study_id.empty()) throw EvidenceError("empty study_id, row " + std::to_string(row));
    if (r.indication.empty()) throw EvidenceError("empty indication, row " + std::to_string(row));
    if (!seen_ids.insert(r.study_id).second) {
      throw EvidenceError("duplicate study_id '" + r.study_id + "', row " + std::to_string(row));
    }
    if (!r.has_pfs() && !r.has_os()) {
      throw EvidenceError("no endpoint data, row " + std::to_string(row));
    }
    if (r.has_pfs() != r.se_pfs.has_value() || r.has_os() != r.se_os.has_value()) {
      throw EvidenceError("estimate and standard error must be present together, row " +
                          std::to_string(row));
    }
    if ((r.se_pfs && *r.se_pfs <= 0.0) || (r.se_os && *r.se_os <= 0.0)) {
      throw EvidenceError("non-positive standard error, row " + std::to_string(row));
    }
    if (!e.indication_index.count(r.indication)) {
      e.indication_index[r.indication] = static_cast<int>(e.indications.size());
      e.indications.push_back(r.indication);
    }
  }
  e.records = std::move(records);
  return e;
}

EvidenceSet parse_evidence(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw EvidenceError("no records (empty input)");
  {
    std::string header = line;
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != kHeader) {
      throw EvidenceError(std::string("missing required column: header must be exactly '") +
                          kHeader + "'");
    }
  }
  std::vector<TrialRecord> records;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() != 8) {
      throw EvidenceError("expected 8 columns, got " + std::to_string(f.size()) + ", row " +
                          std::to_string(row));
    }
    TrialRecord r;
    r.study_id = f[0];
    r.indication = f[1];
    r.lhr_pfs = parse_opt_double(f[2], "lhr_pfs", row);
    r.se_pfs = parse_opt_double(f[3], "se_pfs", row);
    r.pfs_report_date = parse_opt_date(f[4], "pfs_report_date", row);
    r.lhr_os = parse_opt_double(f[5], "lhr_os", row);
    r.se_os = parse_opt_double(f[6], "se_os", row);
    r.os_report_date = parse_opt_date(f[7], "os_report_date", row);
    records.push_back(std::move(r));
  }
  if (records.empty()) throw EvidenceError("no records");
  return make_evidence_set(std::move(records));
}

EvidenceSet parse_evidence_string(const std::string& text) {
  std::istringstream in(text);
  return parse_evidence(in);
}

EvidenceSet parse_evidence_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EvidenceError("cannot open data file '" + path + "'");
  return parse_evidence(in);
}

std::string emit_evidence(const EvidenceSet& e) {
  std::ostringstream out;
  out << kHeader << "\n";
  for (const TrialRecord& r : e.records) {
    out << r.study_id << ',' << r.indication << ',' << fmt_opt(r.lhr_pfs) << ','
        << fmt_opt(r.se_pfs) << ',' << (r.pfs_report_date ? r.pfs_report_date->str() : "") << ','
        << fmt_opt(r.lhr_os) << ',' << fmt_opt(r.se_os) << ','
        << (r.os_report_date ? r.os_report_date->str() : "") << "\n";
  }
  return out.str();
}

void write_evidence_file(const EvidenceSet& e, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw EvidenceError("cannot write data file '" + path + "'");
  out << emit_evidence(e);
}

EvidenceSet snapshot(const EvidenceSet& e, const std::optional<Date>& cutoff) {
  if (!cutoff) return e;
  std::vector<TrialRecord> kept;
  for (TrialRecord r : e.records) {
    if (!(r.pfs_report_date && *r.pfs_report_date <= *cutoff)) {
      r.lhr_pfs.reset();
      r.se_pfs.reset();
      r.pfs_report_date.reset();
    }
    if (!(r.os_report_date && *r.os_report_date <= *cutoff)) {
      r.lhr_os.reset();
      r.se_os.reset();
      r.os_report_date.reset();
    }
    if (r.has_pfs() || r.has_os()) kept.push_back(std::move(r));
  }
  EvidenceSet out;
  if (!kept.empty()) out = make_evidence_set(std::move(kept));
  return out;
}

std::vector<IndicationCounts> summarize(const EvidenceSet& e) {
  std::vector<IndicationCounts> table(e.n_indications());
  for (int j = 0; j < e.n_indications(); ++j) table[j].indication = e.indications[j];
  for (int i = 0; i < e.n_records(); ++i) {
    IndicationCounts& c = table[e.indication_of(i)];
    ++c.n_trials;
    if (e.records[i].has_pfs()) ++c.n_pfs;
    if (e.records[i].has_os()) ++c.n_os;
  }
  return table;
}

EvidenceSet exclude_indication(const EvidenceSet& e, const std::string& label) {
  if (!e.indication_index.count(label)) {
    throw EvidenceError("unknown indication '" + label + "'");
  }
  std::vector<TrialRecord> kept;
  for (const TrialRecord& r : e.records) {
    if (r.indication != label) kept.push_back(r);
  }
  EvidenceSet out;
  if (!kept.empty()) out = make_evidence_set(std::move(kept));
  return out;
}

}  // namespace mima
