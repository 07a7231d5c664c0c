#include "readmit/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

#include "readmit/csv.hpp"
#include "readmit/error.hpp"
#include "readmit/schema.hpp"

namespace readmit::ingest {

void Cohort::rebuild_index() {
  patients.clear();
  for (std::size_t i = 0; i < records.size(); ++i) patients[records[i].patient_id].push_back(i);
}

Cohort build_cohort(const datagen::RawTables& tables) {
  std::unordered_map<std::int64_t, const datagen::PatientRow*> patients;
  for (const auto& p : tables.patients) patients[p.subject_id] = &p;
  std::unordered_set<std::int64_t> with_note;
  for (const auto& n : tables.discharge_notes) with_note.insert(n.hadm_id);

  Cohort c;
  c.report.admissions_in = tables.admissions.size();
  for (const auto& a : tables.admissions) {
    if (a.deathtime) {
      ++c.report.removed_death;
      continue;
    }
    if (!with_note.contains(a.hadm_id)) {
      ++c.report.removed_no_note;
      continue;
    }
    auto it = patients.find(a.subject_id);
    if (it == patients.end()) {
      fail(ErrorKind::Integrity, "admission " + std::to_string(a.hadm_id) + " references unknown patient " +
                                     std::to_string(a.subject_id));
    }
    if (a.dischtime <= a.admittime) {
      fail(ErrorKind::Integrity, "admission " + std::to_string(a.hadm_id) + " has discharge before admit");
    }
    AdmissionRecord r;
    r.patient_id = a.subject_id;
    r.admission_id = a.hadm_id;
    r.admit_time = a.admittime;
    r.discharge_time = a.dischtime;
    r.gender = it->second->gender;
    r.age = it->second->anchor_age;
    r.insurance = a.insurance;
    r.language = std::string(schema::collapse_language(a.language));
    r.marital_status = a.marital_status;
    r.ethnicity = a.ethnicity;
    r.admission_type = a.admission_type;
    r.admission_location = a.admission_location;
    r.discharge_location = a.discharge_location;
    r.month_of_admission = month_of(a.admittime);
    c.records.push_back(std::move(r));
  }
  std::sort(c.records.begin(), c.records.end(), [](const AdmissionRecord& x, const AdmissionRecord& y) {
    if (x.patient_id != y.patient_id) return x.patient_id < y.patient_id;
    if (x.admit_time != y.admit_time) return x.admit_time < y.admit_time;
    return x.admission_id < y.admission_id;
  });
  for (std::size_t i = 1; i < c.records.size(); ++i) {
    const auto& prev = c.records[i - 1];
    const auto& cur = c.records[i];
    if (prev.patient_id == cur.patient_id && prev.admit_time == cur.admit_time) {
      fail(ErrorKind::Integrity, "admissions " + std::to_string(prev.admission_id) + " and " +
                                     std::to_string(cur.admission_id) + " share an admit time");
    }
  }
  c.rebuild_index();
  c.report.cohort_admissions = c.records.size();
  c.report.cohort_patients = c.patients.size();
  return c;
}

Cohort derive_temporal(Cohort c) {
  for (const auto& [patient, rows] : c.patients) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto& r = c.records[rows[k]];
      r.length_of_stay_hours = static_cast<double>(r.discharge_time - r.admit_time) / kMinutesPerHour;
      if (k == 0) {
        r.days_since_previous = kNoPreviousAdmission;
        r.previous_admission_type = std::string(schema::kNone);
      } else {
        const auto& prev = c.records[rows[k - 1]];
        const Minutes gap = std::max<Minutes>(0, r.admit_time - prev.discharge_time);
        r.days_since_previous = static_cast<double>(gap) / kMinutesPerDay;
        r.previous_admission_type =
            prev.admission_type.empty() ? std::string(schema::kNone) : prev.admission_type;
      }
    }
  }
  return c;
}

Cohort label_readmissions(Cohort c) {
  std::size_t positives = 0;
  for (const auto& [patient, rows] : c.patients) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto& r = c.records[rows[k]];
      r.label_readmit_30d =
          k + 1 < rows.size() && c.records[rows[k + 1]].admit_time - r.discharge_time <= kReadmissionWindow;
      positives += r.label_readmit_30d ? 1 : 0;
    }
  }
  c.report.positives = positives;
  return c;
}

Cohort prepare_cohort(const datagen::RawTables& tables) {
  return label_readmissions(derive_temporal(build_cohort(tables)));
}

namespace {

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_cohort_csv(const Cohort& c, const std::filesystem::path& path, const std::string& comment) {
  csv::Writer w(path);
  if (!comment.empty()) w.comment(comment);
  w.row({"patient_id", "admission_id", "admit_time", "discharge_time", "gender", "age", "insurance",
         "language", "marital_status", "ethnicity", "admission_type", "admission_location",
         "discharge_location", "month_of_admission", "length_of_stay_hours", "days_since_previous",
         "previous_admission_type", "label_readmit_30d"});
  for (const auto& r : c.records) {
    w.row({std::to_string(r.patient_id), std::to_string(r.admission_id), format_timestamp(r.admit_time),
           format_timestamp(r.discharge_time), r.gender, std::to_string(r.age), r.insurance, r.language,
           r.marital_status, r.ethnicity, r.admission_type, r.admission_location, r.discharge_location,
           std::to_string(r.month_of_admission), real(r.length_of_stay_hours), real(r.days_since_previous),
           r.previous_admission_type, r.label_readmit_30d ? "1" : "0"});
  }
}

Cohort read_cohort_csv(const std::filesystem::path& path) {
  csv::Reader r(path);
  csv::HeaderMap h(r, {"patient_id", "admission_id", "admit_time", "discharge_time", "gender", "age",
                       "insurance", "language", "marital_status", "ethnicity", "admission_type",
                       "admission_location", "discharge_location", "month_of_admission",
                       "length_of_stay_hours", "days_since_previous", "previous_admission_type",
                       "label_readmit_30d"});
  Cohort c;
  std::vector<std::string> f;
  auto time_at = [&](std::size_t i) {
    Minutes t = 0;
    if (!parse_timestamp(f[h[i]], t)) r.error(h[i] + 1, "malformed timestamp '" + f[h[i]] + "'");
    return t;
  };
  while (r.next(f)) {
    if (f.size() != h.width()) r.error(f.size(), "wrong field count");
    AdmissionRecord a;
    a.patient_id = csv::to_int(r, h[0] + 1, f[h[0]]);
    a.admission_id = csv::to_int(r, h[1] + 1, f[h[1]]);
    a.admit_time = time_at(2);
    a.discharge_time = time_at(3);
    a.gender = f[h[4]];
    a.age = static_cast<int>(csv::to_int(r, h[5] + 1, f[h[5]]));
    a.insurance = f[h[6]];
    a.language = f[h[7]];
    a.marital_status = f[h[8]];
    a.ethnicity = f[h[9]];
    a.admission_type = f[h[10]];
    a.admission_location = f[h[11]];
    a.discharge_location = f[h[12]];
    a.month_of_admission = static_cast<int>(csv::to_int(r, h[13] + 1, f[h[13]]));
    a.length_of_stay_hours = csv::to_real(r, h[14] + 1, f[h[14]]);
    a.days_since_previous = csv::to_real(r, h[15] + 1, f[h[15]]);
    a.previous_admission_type = f[h[16]];
    a.label_readmit_30d = csv::to_int(r, h[17] + 1, f[h[17]]) != 0;
    c.records.push_back(std::move(a));
  }
  c.rebuild_index();
  c.report.cohort_admissions = c.records.size();
  c.report.cohort_patients = c.patients.size();
  for (const auto& a : c.records) c.report.positives += a.label_readmit_30d ? 1 : 0;
  return c;
}

}  // namespace readmit::ingest
