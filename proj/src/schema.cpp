#include "readmit/schema.hpp"

#include <array>

namespace readmit::schema {

namespace {

constexpr std::array<std::string_view, 2> kGenders{"F", "M"};
constexpr std::array<std::string_view, 10> kAdmissionTypes{
    "AMBULATORY OBSERVATION", "DIRECT EMER.",      "DIRECT OBSERVATION",
    "ELECTIVE",               "EU OBSERVATION",    "EW EMER.",
    "OBSERVATION ADMIT",      "SURGICAL SAME DAY ADMISSION", "URGENT",
    "EMERGENCY"};
constexpr std::array<std::string_view, 12> kAdmissionLocations{
    "AMBULATORY SURGERY TRANSFER", "CLINIC REFERRAL",
    "EMERGENCY ROOM",              "INFORMATION NOT AVAILABLE",
    "INTERNAL TRANSFER TO OR FROM PSYCH", "PACU",
    "PHYSICIAN REFERRAL",          "PROCEDURE SITE",
    "TRANSFER FROM HOSPITAL",      "TRANSFER FROM SKILLED NURSING FACILITY",
    "WALK-IN/SELF REFERRAL",       "OTHER"};
constexpr std::array<std::string_view, 15> kDischargeLocations{
    "ACUTE HOSPITAL",     "AGAINST ADVICE",        "ASSISTED LIVING",
    "CHRONIC/LONG TERM ACUTE CARE", "HEALTHCARE FACILITY", "HOME",
    "HOME HEALTH CARE",   "HOSPICE",               "OTHER FACILITY",
    "PSYCH FACILITY",     "REHAB",                 "SKILLED NURSING FACILITY",
    "LONG TERM CARE",     "INPATIENT TRANSFER",    "AMBULATORY"};
constexpr std::array<std::string_view, 3> kInsurances{"Medicaid", "Medicare", "Other"};
constexpr std::array<std::string_view, 2> kLanguages{"ENGLISH", "OTHER"};
constexpr std::array<std::string_view, 6> kEthnicities{"WHITE", "BLACK", "HISPANIC",
                                                       "ASIAN", "NATIVE", "OTHER"};
constexpr std::array<std::string_view, 6> kMarital{"MARRIED",   "SINGLE",    "WIDOWED",
                                                   "DIVORCED",  "SEPARATED", "LIFE PARTNER"};

const std::array<Categorical, 9> kGroups{{
    {"gender", kGenders, false, false},
    {"admission_type", kAdmissionTypes, true, false},
    {"admission_location", kAdmissionLocations, true, false},
    {"discharge_location", kDischargeLocations, true, false},
    {"insurance", kInsurances, true, false},
    {"language", kLanguages, true, false},
    {"ethnicity", kEthnicities, true, false},
    {"marital_status", kMarital, true, false},
    {"previous_admission_type", kAdmissionTypes, false, true},
}};

}  // namespace

std::span<const std::string_view> genders() { return kGenders; }
std::span<const std::string_view> admission_types() { return kAdmissionTypes; }
std::span<const std::string_view> admission_locations() { return kAdmissionLocations; }
std::span<const std::string_view> discharge_locations() { return kDischargeLocations; }
std::span<const std::string_view> insurances() { return kInsurances; }
std::span<const std::string_view> languages() { return kLanguages; }
std::span<const std::string_view> ethnicities() { return kEthnicities; }
std::span<const std::string_view> marital_statuses() { return kMarital; }

std::span<const Categorical> admission_categoricals() { return kGroups; }

const std::vector<std::string>& admission_column_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out{"age", "month_of_admission", "length_of_stay_hours",
                                 "days_since_previous"};
    for (const auto& g : kGroups) {
      for (auto v : g.values) out.push_back(std::string(g.name) + "=" + std::string(v));
      if (g.missing_column) out.push_back(std::string(g.name) + "=<missing>");
      if (g.none_column) out.push_back(std::string(g.name) + "=" + std::string(kNone));
    }
    return out;
  }();
  return names;
}

int category_index(const Categorical& cat, std::string_view value) {
  for (std::size_t i = 0; i < cat.values.size(); ++i) {
    if (cat.values[i] == value) return static_cast<int>(i);
  }
  int next = static_cast<int>(cat.values.size());
  if (cat.missing_column) {
    if (value == kMissing) return next;
    ++next;
  }
  if (cat.none_column && value == kNone) return next;
  return -1;
}

std::string_view collapse_language(std::string_view raw) {
  if (raw == kMissing) return kMissing;
  if (raw == "ENGLISH") return "ENGLISH";
  return "OTHER";
}

}  // namespace readmit::schema
