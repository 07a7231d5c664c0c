#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "readmit/timeutil.hpp"

// Synthetic hospital tables with the column layout of the MIMIC-IV
// admissions/patients/diagnoses_icd/procedures_icd/labevents tables plus
// discharge notes. Every patient belongs to one of eight latent clusters
// (three binary factors); the factors drive diagnosis codes, lab
// abnormality profiles, note vocabulary and demographic preferences, and a
// non-additive function of them drives readmission risk.
namespace readmit::datagen {

inline constexpr int kClusters = 8;
inline constexpr std::int64_t kFirstSubjectId = 10000000;
inline constexpr std::int64_t kFirstAdmissionId = 20000000;
inline constexpr std::int64_t kFirstLabItem = 50000;

struct GenConfig {
  std::uint64_t seed = 1;
  int n_patients = 1000;
  double mean_admissions_per_patient = 2.2;
  double readmission_base_rate = 0.17;
  // 0: labels independent of the latent cluster; 1: fully cluster driven.
  double homophily_strength = 0.5;
  int n_lab_items = 856;
  int n_icd_diag = 2000;
  int n_icd_proc = 800;
  // Mean note length is 10,550 characters times this factor.
  double note_length_scale = 0.25;
  // Per-modality fraction of admissions without diagnoses, procedures,
  // lab events or a discharge note.
  double missing_modality_fraction = 0.10;
  // Fraction of patients whose last admission ends in an in-hospital death.
  double death_fraction = 0.03;
  // Probability that a demographic field takes its factor-preferred value.
  double demographic_concentration = 0.85;

  // Throws a configuration error naming the first invalid field.
  void validate() const;
};

struct AdmissionRow {
  std::int64_t subject_id = 0;
  std::int64_t hadm_id = 0;
  Minutes admittime = 0;
  Minutes dischtime = 0;
  std::optional<Minutes> deathtime;
  std::string admission_type;
  std::string admission_location;
  std::string discharge_location;
  std::string insurance;
  std::string language;
  std::string marital_status;
  std::string ethnicity;

  bool operator==(const AdmissionRow&) const = default;
};

struct PatientRow {
  std::int64_t subject_id = 0;
  std::string gender;
  int anchor_age = 0;

  bool operator==(const PatientRow&) const = default;
};

// Shared by diagnoses_icd and procedures_icd.
struct CodeRow {
  std::int64_t subject_id = 0;
  std::int64_t hadm_id = 0;
  int seq_num = 0;
  std::string icd_code;
  int icd_version = 10;

  bool operator==(const CodeRow&) const = default;
};

struct LabRow {
  std::int64_t subject_id = 0;
  std::int64_t hadm_id = 0;
  std::int64_t itemid = 0;
  Minutes charttime = 0;
  bool abnormal = false;

  bool operator==(const LabRow&) const = default;
};

struct NoteRow {
  std::int64_t subject_id = 0;
  std::int64_t hadm_id = 0;
  std::string note_text;

  bool operator==(const NoteRow&) const = default;
};

struct CodeTitleRow {
  std::string icd_code;
  int icd_version = 10;
  std::string long_title;

  bool operator==(const CodeTitleRow&) const = default;
};

struct RawTables {
  std::vector<AdmissionRow> admissions;
  std::vector<PatientRow> patients;
  std::vector<CodeRow> diagnoses_icd;
  std::vector<CodeRow> procedures_icd;
  std::vector<LabRow> labevents;
  std::vector<NoteRow> discharge_notes;
  // icd_code/icd_version -> long_title for every code in both code tables.
  std::vector<CodeTitleRow> code_text_map;

  bool operator==(const RawTables&) const = default;
};

// Pure function of `config`. When `latent_cluster` is given it receives the
// cluster (0..7) of each patient, in patients-table order.
RawTables generate(const GenConfig& config, std::vector<int>* latent_cluster = nullptr);

// Readmission probability per discharge for a cluster under `config`.
double cluster_readmission_probability(const GenConfig& config, int cluster);

// A non-empty comment is written as a leading '# ' line of every file.
void write_tables(const RawTables& tables, const std::filesystem::path& dir, const std::string& comment = {});
RawTables read_tables(const std::filesystem::path& dir);

}  // namespace readmit::datagen
