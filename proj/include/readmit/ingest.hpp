#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "readmit/datagen.hpp"
#include "readmit/timeutil.hpp"

namespace readmit::ingest {

// days_since_previous before scaling for a patient's first admission.
inline constexpr double kNoPreviousAdmission = -1.0;
inline constexpr Minutes kReadmissionWindow = 30 * kMinutesPerDay;

struct AdmissionRecord {
  std::int64_t patient_id = 0;
  std::int64_t admission_id = 0;
  Minutes admit_time = 0;
  Minutes discharge_time = 0;

  std::string gender;
  int age = 0;
  std::string insurance;
  std::string language;  // ENGLISH, OTHER or empty
  std::string marital_status;
  std::string ethnicity;
  std::string admission_type;
  std::string admission_location;
  std::string discharge_location;
  int month_of_admission = 0;

  double length_of_stay_hours = 0.0;
  double days_since_previous = kNoPreviousAdmission;
  std::string previous_admission_type = "NONE";
  bool label_readmit_30d = false;

  bool operator==(const AdmissionRecord&) const = default;
};

struct IngestReport {
  std::size_t admissions_in = 0;
  std::size_t removed_death = 0;    // had a death timestamp
  std::size_t removed_no_note = 0;  // alive but without discharge note
  std::size_t cohort_admissions = 0;
  std::size_t cohort_patients = 0;
  std::size_t positives = 0;
};

// Records are ordered by (patient_id, admit_time); the patient index maps a
// patient to positions in `records`, ascending by admit time.
struct Cohort {
  std::vector<AdmissionRecord> records;
  std::map<std::int64_t, std::vector<std::size_t>> patients;
  IngestReport report;

  void rebuild_index();
};

// Drops admissions with a death timestamp or no discharge note and joins
// patient demographics. Unknown patients are integrity errors.
Cohort build_cohort(const datagen::RawTables& tables);

// Length of stay, days since the previous discharge (clamped at 0 for
// overlapping stays) and previous admission type.
Cohort derive_temporal(Cohort cohort);

// label = next admission of the same patient starts at most 30 days after
// this discharge.
Cohort label_readmissions(Cohort cohort);

// build_cohort -> derive_temporal -> label_readmissions.
Cohort prepare_cohort(const datagen::RawTables& tables);

void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path, const std::string& comment = {});
Cohort read_cohort_csv(const std::filesystem::path& path);

}  // namespace readmit::ingest
